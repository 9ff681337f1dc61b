#!/usr/bin/env python3
"""
Defaults Configuration Helper
Provides consistent numerical defaults and output paths across all components
"""

import os

# Solver defaults
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 200000
LINE_SEARCH_TOL = 1e-10
FEASIBILITY_TOL = 1e-8
CONSTRAINT_TOL = 1e-9
PIVOT_TOL = 1e-10
GRADIENT_FLOOR = 1e-12

# Probability objects
SUM_TOL = 1e-9

# Size caps
MAX_RELAXATION_VARIABLES = int(os.environ.get("POSETCAP_MAX_VARIABLES", "4096"))
GRID_SEARCH_BUDGET = 3_000_000
MAX_SET_SIZE = 512
MAX_ENUMERATION_OUTCOMES = 1 << 20
EQUIV_SEARCH_SCALE = 6

# Output paths
OUTPUT_DIR = os.environ.get("POSETCAP_OUTPUT", "output")
CHANNEL_FILE_SUFFIX = ".chan.json"


def get_thread_count() -> int:
    """Number of worker threads for parallel sweeps (POSETCAP_THREADS caps it)."""
    raw = os.environ.get("POSETCAP_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, os.cpu_count() or 1)


def get_output_dir() -> str:
    """Get the directory sweep and report files are written to."""
    return OUTPUT_DIR
