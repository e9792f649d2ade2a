#!/usr/bin/env python
# =============================================================================
# RUN CLI
# =============================================================================
"""
Script to run the command-line front end.
Usage: python run_cli.py <command> [options]
"""

import sys

from cli.main import main

if __name__ == "__main__":
    sys.exit(main())
