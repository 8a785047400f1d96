"""Exact-arithmetic checks over random binary models of a graph.

For each random CPT draw and each binary regime:

* every enumerated set's nested formula must equal the g-formula truth;
* every directly certified pair must satisfy ``Var psi(lower) <= Var psi(higher)``;
* every nested pair certified by the inclusion criterion must satisfy
  ``Var psi_B = Var psi_(G,B) + sum_k Var r_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .adjustment import EnumeratedSet, enumerate_def2_sets
from .compare import build_dominance_order, lemma1_certifies
from .discrete import binary_regimes, oracle_models
from .graph import Dag

__all__ = ["OracleFailure", "OracleReport", "lemma1_pairs", "run_oracle_suite"]


@dataclass(frozen=True)
class OracleFailure:
    check: str  # "identification" | "dominance" | "decomposition"
    draw: int
    regime: tuple[int, ...]
    sets: tuple[int, ...]
    detail: str

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "draw": self.draw,
            "regime": "".join(map(str, self.regime)),
            "sets": list(self.sets),
            "detail": self.detail,
        }


@dataclass
class OracleReport:
    draws: int
    seed: int
    n_sets: int
    n_certified: int
    n_lemma1: int
    checked: dict[str, int] = field(default_factory=lambda: {"identification": 0, "dominance": 0, "decomposition": 0})
    failures: list[OracleFailure] = field(default_factory=list)

    def passed(self, check: str | None = None) -> bool:
        return not any(check is None or f.check == check for f in self.failures)

    def to_json(self) -> dict:
        return {
            "draws": self.draws,
            "seed": self.seed,
            "sets": self.n_sets,
            "certified_pairs": self.n_certified,
            "lemma1_pairs": self.n_lemma1,
            "checked": dict(self.checked),
            "passed": {c: self.passed(c) for c in self.checked},
            "failures": [f.to_json() for f in self.failures],
        }


def lemma1_pairs(dag: Dag, sets: list[EnumeratedSet]) -> list[tuple[int, int]]:
    """``(gb, b)`` numbers of nested pairs certified by the inclusion criterion.

    Only pairs whose larger set is exactly a definition-1 history count.
    """
    out = []
    for b in sets:
        for gb in sets:
            if gb is b or not b.z.issubset(gb.z):
                continue
            g = gb.z.minus(b.z)
            cert = lemma1_certifies(dag, b.z, g)
            if cert is not None and cert.scaffolding_verified:
                out.append((gb.number, b.number))
    return out


def run_oracle_suite(dag: Dag, draws: int = 5, seed: int = 0) -> OracleReport:
    sets = enumerate_def2_sets(dag)
    by_num = {s.number: s.z for s in sets}
    order = build_dominance_order(dag, [s.z for s in sets])
    certified = sorted((lo + 1, hi + 1) for lo, hi in order.certificates)
    nested = lemma1_pairs(dag, sets)
    report = OracleReport(draws, seed, len(sets), len(certified), len(nested))
    regimes = binary_regimes(dag.p)
    for d, model in enumerate(oracle_models(dag, draws, seed)):
        for a in regimes:
            truth = model.truth(a)
            var: dict[int, Fraction] = {}
            for s in sets:
                chi, v = model.exact_variance(s.z, a)
                var[s.number] = v
                report.checked["identification"] += 1
                if chi != truth:
                    report.failures.append(
                        OracleFailure("identification", d, a, (s.number,), f"nested {chi} != truth {truth}")
                    )
            for lo, hi in certified:
                report.checked["dominance"] += 1
                if not var[lo] <= var[hi]:
                    report.failures.append(
                        OracleFailure(
                            "dominance", d, a, (lo, hi), f"var {float(var[lo]):.6g} > {float(var[hi]):.6g}"
                        )
                    )
            for gb, b in nested:
                report.checked["decomposition"] += 1
                diag = model.r_diagnostics(by_num[gb], by_num[b], a)
                rhs = diag["var_psi_gb"] + sum(diag["var_r"], Fraction(0))
                if diag["var_psi_b"] != rhs:
                    report.failures.append(
                        OracleFailure(
                            "decomposition", d, a, (gb, b), f"gap {float(diag['var_psi_b'] - rhs):.6g}"
                        )
                    )
    return report


