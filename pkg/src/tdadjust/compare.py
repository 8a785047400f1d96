"""Graphical variance comparison of sufficient adjustment sets.

Three criteria are implemented, each returning a :class:`DominanceCertificate`
when its d-separation conditions hold in the observational DAG:

* inclusion (``lemma1_certifies``): adding ``G`` to ``B`` cannot increase
  the variance when ``A_k _||_ G_k | B_k`` for all k;
* exclusion (``lemma2_certifies``): removing ``B`` from ``(G, B)`` cannot
  increase it when ``Y _||_ B_p | G_p, A_p`` and
  ``G_k _||_ B_{k-1} | G_{k-1}, A_{k-1}``;
* the combined two-set criterion (``theorem1_certifies``).

All three also require a covariate set ``K`` satisfying sequential
exchangeability with history ``H_k = {A_0..A_{k-1}, K_0..K_k}``.  For the
two single-step criteria the larger set must equal ``H``; for the two-set
criterion both sets must lie inside ``H``.  A witness is searched
automatically; when none exists the certificate is kept but flagged as
having unverified scaffolding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .adjustment import AdjustmentSet, def1_sets, def1_to_def2_notation
from .dsep import DsepQuery, separated_mask
from .graph import Dag

log = logging.getLogger(__name__)

__all__ = [
    "CheckedQuery",
    "DominanceCertificate",
    "DominanceOrder",
    "lemma1_certifies",
    "lemma2_certifies",
    "theorem1_certifies",
    "theorem1_conditions",
    "build_dominance_order",
    "find_witness",
]


@dataclass(frozen=True)
class CheckedQuery:
    """A d-separation statement as written in the criterion and its verdict.

    The criterion may name a conditioning variable on the left-hand side too
    (e.g. ``A_0`` in both ``G_1`` and the conditioning set).  Such members are
    trivially independent given themselves and are removed before the graph
    is queried; ``evaluated`` is the query actually run.
    """

    query: DsepQuery
    evaluated: DsepQuery
    holds: bool
    condition: str

    def to_json(self, dag: Dag) -> dict:
        out = self.query.to_json(dag)
        out["evaluated"] = self.evaluated.to_json(dag)
        out["holds"] = self.holds
        out["condition"] = self.condition
        return out


def _check(dag: Dag, x, y, z, condition: str) -> CheckedQuery:
    x, y, z = frozenset(x), frozenset(y), frozenset(z)
    raw = DsepQuery(x, y, z)
    ev = DsepQuery(x - z, y - z, z)
    if ev.x & ev.y:
        holds = False
    else:
        holds = separated_mask(dag, dag.mask(ev.x), dag.mask(ev.y), dag.mask(ev.z))
    return CheckedQuery(raw, ev, holds, condition)


@dataclass
class DominanceCertificate:
    """``lower`` has asymptotic variance no larger than ``higher``.

    The inequality covers both single-regime means and contrasts.
    """

    lower: AdjustmentSet
    higher: AdjustmentSet
    rule: str  # "lemma1" | "lemma2" | "theorem1" | "transitive"
    checked_independencies: list[CheckedQuery] = field(default_factory=list)
    witness: AdjustmentSet | None = None
    scaffolding_verified: bool = True
    chain: tuple[int, ...] = ()

    def to_json(self, dag: Dag, numbers: dict[AdjustmentSet, int] | None = None) -> dict:
        numbers = numbers or {}
        out = {
            "rule": self.rule,
            "lower": self.lower.to_json(dag),
            "higher": self.higher.to_json(dag),
            "lower_label": self.lower.label(dag),
            "higher_label": self.higher.label(dag),
            "checked_independencies": [q.to_json(dag) for q in self.checked_independencies],
            "witness": self.witness.to_json(dag) if self.witness is not None else None,
            "scaffolding_verified": self.scaffolding_verified,
        }
        if self.lower in numbers:
            out["lower_number"] = numbers[self.lower]
            out["higher_number"] = numbers[self.higher]
        if self.chain:
            out["chain"] = list(self.chain)
        return out


def _as_parts(dag: Dag, parts) -> AdjustmentSet:
    if isinstance(parts, AdjustmentSet):
        z = parts
    else:
        z = AdjustmentSet.of(*parts)
    if len(z) != dag.p + 1:
        raise ValueError(f"expected {dag.p + 1} time points, got {len(z)}")
    for k, part in enumerate(z):
        for v in part:
            if v not in dag.roles or dag.roles[v].is_outcome:
                raise ValueError(f"invalid member {v!r} at time {k}")
    return z


def _histories(dag: Dag) -> list[AdjustmentSet]:
    return [def1_to_def2_notation(k, dag) for k in def1_sets(dag)]


def find_witness(
    dag: Dag, *sets: AdjustmentSet, histories: Sequence[AdjustmentSet] | None = None, exact: bool = False
) -> AdjustmentSet | None:
    """A definition-1 history containing every set (equal to their union if ``exact``)."""
    if histories is None:
        histories = _histories(dag)
    union = sets[0]
    for s in sets[1:]:
        union = union.union(s)
    for h in histories:
        if (union == h) if exact else union.issubset(h):
            return h
    return None


def lemma1_certifies(
    dag: Dag, b, g_extra, histories: Sequence[AdjustmentSet] | None = None
) -> DominanceCertificate | None:
    """Certify ``var((G,B)) <= var(B)`` from ``A_k _||_ G_k | B_k``."""
    b = _as_parts(dag, b)
    g = _as_parts(dag, g_extra)
    if any(gk & bk for gk, bk in zip(g, b)):
        raise ValueError("G_k and B_k must be disjoint")
    checks = [
        _check(dag, [dag.treatments[k]], g[k], b[k], "inclusion")
        for k in range(dag.p, -1, -1)
    ]
    if not all(c.holds for c in checks):
        return None
    return _certificate(dag, b.union(g), b, "lemma1", checks, histories, exact=True)


def lemma2_certifies(
    dag: Dag, g, b_removed, histories: Sequence[AdjustmentSet] | None = None
) -> DominanceCertificate | None:
    """Certify ``var(G) <= var((G,B))`` from the two exclusion conditions."""
    g = _as_parts(dag, g)
    b = _as_parts(dag, b_removed)
    if any(gk & bk for gk, bk in zip(g, b)):
        raise ValueError("G_k and B_k must be disjoint")
    p = dag.p
    checks = [_check(dag, [dag.outcome], b[p], g[p] | {dag.treatments[p]}, "exclusion-outcome")]
    for k in range(p, 0, -1):
        checks.append(_check(dag, g[k], b[k - 1], g[k - 1] | {dag.treatments[k - 1]}, "exclusion-history"))
    if not all(c.holds for c in checks):
        return None
    return _certificate(dag, g, g.union(b), "lemma2", checks, histories, exact=True)


def theorem1_conditions(dag: Dag, b: AdjustmentSet, g: AdjustmentSet) -> list[CheckedQuery]:
    """Every d-separation the two-set criterion requires, in display order."""
    p = dag.p
    checks = [
        _check(dag, [dag.treatments[k]], g[k] - b[k], b[k], "inclusion")
        for k in range(p, -1, -1)
    ]
    checks.append(_check(dag, [dag.outcome], b[p] - g[p], g[p] | {dag.treatments[p]}, "exclusion-outcome"))
    for k in range(p, 0, -1):
        checks.append(
            _check(dag, g[k], b[k - 1] - g[k - 1], g[k - 1] | {dag.treatments[k - 1]}, "exclusion-history")
        )
    return checks


def theorem1_certifies(
    dag: Dag, b, g, histories: Sequence[AdjustmentSet] | None = None
) -> DominanceCertificate | None:
    """Certify ``var(G) <= var(B)`` for two sufficient sets."""
    b = _as_parts(dag, b)
    g = _as_parts(dag, g)
    checks = theorem1_conditions(dag, b, g)
    if not all(c.holds for c in checks):
        return None
    return _certificate(dag, g, b, "theorem1", checks, histories)


def _certificate(dag, lower, higher, rule, checks, histories, exact=False) -> DominanceCertificate:
    witness = find_witness(dag, lower, higher, histories=histories, exact=exact)
    if witness is None:
        log.debug("no definition-1 witness for %s vs %s; scaffolding unverified", lower.label(dag), higher.label(dag))
    return DominanceCertificate(lower, higher, rule, checks, witness, witness is not None)


@dataclass
class DominanceOrder:
    """Certified variance ordering over a list of sets (indices are 0-based)."""

    elements: list[AdjustmentSet]
    certificates: dict[tuple[int, int], DominanceCertificate]
    closure: frozenset[tuple[int, int]]  # (lower, higher), transitively closed
    strict: frozenset[tuple[int, int]]
    equivalent: frozenset[tuple[int, int]]
    minima: list[int]

    def dominates(self, lower: int, higher: int) -> bool:
        return (lower, higher) in self.closure

    def to_json(self, dag: Dag, numbers: Sequence[int] | None = None) -> dict:
        numbers = list(numbers) if numbers is not None else list(range(1, len(self.elements) + 1))
        num_of = {z: n for z, n in zip(self.elements, numbers)}
        return {
            "sets": [
                {"number": n, "sets": z.to_json(dag), "label": z.label(dag)} for z, n in zip(self.elements, numbers)
            ],
            "certificates": [
                self.certificates[key].to_json(dag, num_of) for key in sorted(self.certificates)
            ],
            "strict": [[numbers[i], numbers[j]] for i, j in sorted(self.strict)],
            "equivalent": [[numbers[i], numbers[j]] for i, j in sorted(self.equivalent) if i < j],
            "minima": [numbers[i] for i in self.minima],
        }


def build_dominance_order(dag: Dag, sets: Sequence[AdjustmentSet]) -> DominanceOrder:
    """Check the two-set criterion on every ordered pair, then close transitively.

    ``minima`` lists sets that no other set strictly dominates.
    """
    sets = list(sets)
    n = len(sets)
    histories = _histories(dag)
    certs: dict[tuple[int, int], DominanceCertificate] = {}
    for hi in range(n):
        for lo in range(n):
            if hi == lo:
                continue
            cert = theorem1_certifies(dag, sets[hi], sets[lo], histories=histories)
            if cert is not None:
                certs[(lo, hi)] = cert
    # transitive closure (Warshall on bitsets)
    reach = [0] * n
    for lo, hi in certs:
        reach[lo] |= 1 << hi
    for mid in range(n):
        for i in range(n):
            if (reach[i] >> mid) & 1:
                reach[i] |= reach[mid]
    closure = frozenset((i, j) for i in range(n) for j in range(n) if i != j and (reach[i] >> j) & 1)
    strict = frozenset((i, j) for i, j in closure if (j, i) not in closure)
    equivalent = frozenset((i, j) for i, j in closure if (j, i) in closure)
    dominated = {j for _, j in strict}
    minima = [i for i in range(n) if i not in dominated]
    return DominanceOrder(sets, certs, closure, strict, equivalent, minima)
