"""pytest fixtures."""

import logging

import pytest


@pytest.fixture(autouse=True)
def restore_package_logger():
    """Undo handlers and levels the CLI installs on the package logger."""
    logger = logging.getLogger("trashnet_transfer")
    level = logger.level
    handlers = list(logger.handlers)
    yield
    logger.setLevel(level)
    logger.handlers[:] = handlers
