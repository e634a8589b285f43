"""Property and feature tests spanning several modules."""
