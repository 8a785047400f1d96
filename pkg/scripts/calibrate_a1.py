"""Grid search behind the default A1 equation of the ``example1`` model.

The A1 equation is not given with the published DGP.  For each coefficient
triple on a coarse grid this script computes the asymptotic SD
``sd(psi) / sqrt(1000)`` of every set from one large sample and reports the
distance to the published SD column; the leading candidates are then
re-scored with a finite-sample Monte Carlo run.
"""

import argparse
import itertools

import numpy as np

from tdadjust import enumerate_def2_sets, load_dag
from tdadjust.estimate import mc_study, onestep_estimate
from tdadjust.reference import TABLE1_SD
from tdadjust.scm import Equation, ScmSpec, builtin_scm, simulate_dataset


def with_a1(coef):
    base = builtin_scm("example1")
    eqs = [e if e.node != "A1" else Equation("A1", coef=coef, link="expit-bernoulli") for e in base.equations]
    return ScmSpec(base.dag, eqs, "candidate")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=150_000)
    ap.add_argument("--reps", type=int, default=1000)
    ap.add_argument("--top", type=int, default=4)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()
    dag = load_dag("example1")
    sets = [s.z for s in enumerate_def2_sets(dag)]
    ref = np.array(TABLE1_SD)
    scored = []
    for c02, a0, c11 in itertools.product([0.25, 0.5, 0.75, 1.0], [0.5, 1.0], [0.25, 0.5, 0.75, 1.0]):
        coef = {"C02": c02, "A0": a0, "C11": c11}
        ds = simulate_dataset(with_a1(coef), args.n, args.seed)
        sd = np.array([onestep_estimate(dag, ds, z, (1, 1))[1].psi.std() / np.sqrt(1000) for z in sets])
        rms = float(np.sqrt(np.mean((sd - ref) ** 2)))
        scored.append((rms, coef))
        print(f"asymptotic  {coef}  rms={rms:.4f}  max={np.abs(sd - ref).max():.4f}", flush=True)
    scored.sort(key=lambda t: t[0])
    for _, coef in scored[: args.top]:
        rep = mc_study(with_a1(coef), sets, (1, 1), reps=args.reps, n=1000, seed=7)
        sd = rep.sd("onestep")
        print(f"finite n    {coef}  rms={np.sqrt(np.mean((sd - ref) ** 2)):.4f}  max={np.abs(sd - ref).max():.4f}")


if __name__ == "__main__":
    main()
