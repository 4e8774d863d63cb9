#!/usr/bin/env python3
"""
Main entry point for tbs-noma when run as a module.
"""

import sys

from tbs_noma.cli import main

if __name__ == "__main__":
    sys.exit(main())
