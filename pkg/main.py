#!/usr/bin/env python3
"""
posetcap - Main Launcher
Clean root-level entry point that delegates to the CLI in src/cli.py
"""

import os
import sys

# Add project root to Python path for imports
project_root = os.path.dirname(os.path.abspath(__file__))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

# pylint: disable=wrong-import-position
from src.cli import main

if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n👋 Cancelled by user")
        sys.exit(130)
