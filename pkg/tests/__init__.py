"""Tests for the trashnet_transfer package."""
