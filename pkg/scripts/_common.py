"""Shared helpers for the experiment scripts."""

import argparse
import json
from pathlib import Path

from tdadjust.cli import reproduce_table

RESULTS = Path(__file__).resolve().parent.parent / "results"


def run(table: str, default_reps: int) -> int:
    ap = argparse.ArgumentParser(description=f"Monte Carlo reproduction of {table}.")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--reps", type=int, default=default_reps)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", type=Path, default=RESULTS / f"{table}.json")
    args = ap.parse_args()
    result = reproduce_table(table, args.seed, args.reps, args.n, args.jobs)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    for scm, rows in result["columns"].items():
        print(scm)
        print(f"{'set':>4} {'published':>9} {'sd':>7} {'se':>7} {'diff':>7}")
        for r in rows:
            flag = "" if r["within_tolerance"] else "  <-- outside tolerance"
            print(f"{r['set']:>4} {r['published']:>9.3f} {r['sd']:>7.4f} {r['se_sd']:>7.4f} {r['diff']:>7.4f}{flag}")
    for name, ok in result["checks"].items():
        print(f"{'pass' if ok else 'FAIL'}  {name}")
    print(f"wrote {args.out}")
    return 0 if result["passed"] else 2
