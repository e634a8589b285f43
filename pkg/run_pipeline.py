#!/usr/bin/env python3
"""Entry point for running the transfer-learning command line."""

import sys

from trashnet_transfer.cli import main

if __name__ == "__main__":
    sys.exit(main())
