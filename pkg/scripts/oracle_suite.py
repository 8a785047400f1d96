"""Exact-arithmetic oracle checks on both example graphs.

Prints one summary line per check and lists every failing case.
"""

import argparse
from collections import Counter

from tdadjust import load_dag
from tdadjust.oracle import run_oracle_suite


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--draws", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for name in ("example1", "example2"):
        report = run_oracle_suite(load_dag(name), args.draws, args.seed)
        print(f"== {name}: {report.n_sets} sets, {report.n_certified} certified pairs, {report.n_lemma1} inclusion pairs")
        for check, count in report.checked.items():
            bad = [f for f in report.failures if f.check == check]
            print(f"  {check:<15} {count:>5} cases  {len(bad):>4} failures")
        tally = Counter((f.check, f.sets) for f in report.failures)
        for (check, pair), count in sorted(tally.items()):
            print(f"    {check} {pair}: {count} of {args.draws * 2 ** 2} draw x regime cases")


if __name__ == "__main__":
    main()
