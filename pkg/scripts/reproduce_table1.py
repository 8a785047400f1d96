"""Example 1: MC SD of the one-step estimator of E[Y^(1,1)] for all 24 sets.

Usage: python scripts/reproduce_table1.py [--reps 10000] [--jobs 4] [--seed 2024]
"""

import sys

from _common import run

if __name__ == "__main__":
    sys.exit(run("table1", 10_000))
