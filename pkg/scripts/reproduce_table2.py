"""Example 2: MC SD for all 26 sets under both data-generating scenarios.

Usage: python scripts/reproduce_table2.py [--reps 20000] [--jobs 4] [--seed 2024]
"""

import sys

from _common import run

if __name__ == "__main__":
    sys.exit(run("table2", 20_000))
