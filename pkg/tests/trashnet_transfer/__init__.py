"""Tests for the transfer-learning toolkit."""
