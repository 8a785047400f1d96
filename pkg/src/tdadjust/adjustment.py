"""Time-dependent adjustment sets: sufficiency checks, reduction and enumeration.

An adjustment set is a tuple ``(Z_0, ..., Z_p)`` of node sets.  ``Z_k`` may
contain covariates and, from ``k = 1`` on, earlier treatments ``A_j`` (j < k)
which are held fixed at their regime values when the identification formula
is evaluated.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .dsep import separated_mask
from .graph import Dag, NodeGraph
from .swig import build_swig, sequential_exchangeability_holds

log = logging.getLogger(__name__)

__all__ = [
    "AdjustmentSet",
    "AdjustmentError",
    "Decomposition",
    "EnumeratedSet",
    "entry_times",
    "eligible",
    "is_sufficient_def1",
    "def1_to_def2_notation",
    "algorithm1_reduce",
    "ReductionTrace",
    "is_sufficient_def2",
    "enumerate_def2_sets",
    "candidate_sets",
    "numbering_key",
    "def1_sets",
    "decompose",
    "find_set",
    "IndeterminateError",
    "UniverseSizeError",
]

DEFAULT_ORACLE_DRAWS = 5
DEFAULT_MAX_UNIVERSE = 1 << 16


class AdjustmentError(ValueError):
    pass


class UniverseSizeError(AdjustmentError):
    """The candidate space is larger than the configured limit."""


class IndeterminateError(AdjustmentError):
    """Random oracle draws disagreed about a candidate set."""


@dataclass(frozen=True)
class AdjustmentSet:
    parts: tuple[frozenset[str], ...]

    @classmethod
    def of(cls, *parts: Iterable[str] | str | None) -> "AdjustmentSet":
        """``AdjustmentSet.of("C02", ["C12", "A0"])``; ``None`` or ``()`` is empty."""
        out = []
        for part in parts:
            if part is None:
                out.append(frozenset())
            elif isinstance(part, str):
                out.append(frozenset([part]))
            else:
                out.append(frozenset(part))
        return cls(tuple(out))

    def __len__(self) -> int:
        return len(self.parts)

    def __getitem__(self, k: int) -> frozenset[str]:
        return self.parts[k]

    def __iter__(self):
        return iter(self.parts)

    @property
    def p(self) -> int:
        return len(self.parts) - 1

    def nodes(self) -> frozenset[str]:
        return frozenset().union(*self.parts)

    def held_fixed(self, dag: Dag, k: int) -> frozenset[str]:
        """Past treatments inside ``Z_k``: conditioned at their regime values."""
        return frozenset(v for v in self.parts[k] if dag.roles[v].is_treatment)

    def covariates(self, dag: Dag, k: int) -> frozenset[str]:
        return frozenset(v for v in self.parts[k] if dag.roles[v].is_covariate)

    def canonical(self, graph: NodeGraph) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(sorted(part, key=graph.index.__getitem__)) for part in self.parts)

    def label(self, dag: Dag) -> str:
        def fmt(part):
            items = sorted(part, key=dag.role_key)
            if not items:
                return "{}"
            if len(items) == 1:
                return items[0]
            return "{" + ", ".join(items) + "}"

        return "(" + "; ".join(fmt(part) for part in self.parts) + ")"

    def to_json(self, dag: Dag) -> list[list[str]]:
        return [list(part) for part in self.canonical(dag)]

    def union(self, other: "AdjustmentSet") -> "AdjustmentSet":
        return AdjustmentSet(tuple(a | b for a, b in zip(self.parts, other.parts)))

    def minus(self, other: "AdjustmentSet") -> "AdjustmentSet":
        return AdjustmentSet(tuple(a - b for a, b in zip(self.parts, other.parts)))

    def issubset(self, other: "AdjustmentSet") -> bool:
        return all(a <= b for a, b in zip(self.parts, other.parts))


def _check_shape(dag: Dag, z: AdjustmentSet) -> None:
    if len(z) != dag.p + 1:
        raise AdjustmentError(f"adjustment set has {len(z)} parts, graph has p+1={dag.p + 1} times")
    for k, part in enumerate(z):
        for v in part:
            if v not in dag.roles:
                raise AdjustmentError(f"unknown node {v!r} in Z_{k}")
            role = dag.roles[v]
            if role.is_outcome:
                raise AdjustmentError("the outcome cannot be adjusted for")
            if role.is_treatment and role.k >= k:
                raise AdjustmentError(f"Z_{k} may only hold treatments A_j with j < {k}; got {v}")
            if role.is_covariate and k not in _covariate_times(dag, v, upto=True):
                raise AdjustmentError(f"{v} is not available at time {k}")


def entry_times(dag: Dag, v: str) -> tuple[int, ...]:
    """Times at which covariate ``v`` may first enter an adjustment set.

    ``v`` may enter at any ``k`` up to its declared time index provided it
    is not caused by any of ``A_k, ..., A_p``.
    """
    role = dag.roles[v]
    i = dag.index[v]
    out = []
    for k in range(role.k + 1):
        if not any((dag.de[dag.index[a]] >> i) & 1 for a in dag.treatments[k:]):
            out.append(k)
    return tuple(out)


def _covariate_times(dag: Dag, v: str, upto: bool) -> range | tuple:
    times = entry_times(dag, v)
    if not times:
        return ()
    return range(times[0], dag.p + 1) if upto else times


def eligible(dag: Dag, k: int) -> tuple[str, ...]:
    """Every node that may appear in ``Z_k`` for some adjustment set."""
    out = [a for a in dag.treatments[:k]]
    out += [c for c in dag.covariates if entry_times(dag, c) and entry_times(dag, c)[0] <= k]
    return tuple(sorted(out, key=dag.index.__getitem__))


# --- Definition 1 ---------------------------------------------------------


def is_sufficient_def1(dag: Dag, z: AdjustmentSet) -> bool:
    """Sequential conditional exchangeability of the covariate-only set ``z``."""
    if len(z) != dag.p + 1:
        raise AdjustmentError("wrong number of time points")
    for k, part in enumerate(z):
        for v in part:
            if v not in dag.roles or not dag.roles[v].is_covariate:
                raise AdjustmentError(f"definition-1 sets hold covariates only; got {v!r} in Z_{k}")
            if k not in entry_times(dag, v):
                raise AdjustmentError(f"{v} cannot enter at time {k}")
    return sequential_exchangeability_holds(build_swig(dag), z)


def def1_to_def2_notation(z: AdjustmentSet, dag: Dag | None = None) -> AdjustmentSet:
    """Rewrite ``(Z_0, ..., Z_p)`` as ``Z'_k = {A_0..A_{k-1}} + Z_0 + ... + Z_k``.

    Treatment names are taken from ``dag`` when given; otherwise the parts
    are only accumulated (useful for p = 0).
    """
    history: frozenset[str] = frozenset()
    parts = []
    for k, part in enumerate(z):
        if k > 0 and dag is not None:
            history |= {dag.treatments[k - 1]}
        history |= part
        parts.append(history)
    if dag is None and len(z) > 1:
        raise AdjustmentError("a graph is needed to name past treatments")
    return AdjustmentSet(tuple(parts))


# --- Algorithm 1 ----------------------------------------------------------


@dataclass
class ReductionTrace:
    """Record of one backward sweep: what was dropped at each time."""

    retained: list[frozenset[str]] = field(default_factory=list)
    dropped: list[tuple[int, str]] = field(default_factory=list)
    graphs: list[NodeGraph] = field(default_factory=list)


def _q_name(graph: NodeGraph, k: int) -> str:
    name = f"Q{k}"
    while name in graph:
        name = "_" + name
    return name


def algorithm1_reduce(dag: Dag, z: AdjustmentSet, trace: ReductionTrace | None = None) -> AdjustmentSet:
    """Drop variables not needed by the nested identification formula.

    Sweeps ``k = p, ..., 0``.  At each step the working graph carries a
    pseudo-outcome ``Q_{k+1}`` (initially ``Y``); members of ``Z_k`` that
    are d-separated from it given ``A_k`` and the rest of ``Z_k`` are
    removed one at a time in reverse topological order.  The retained set
    then becomes the parent set of a fresh ``Q_k``, and ``A_k`` and
    ``Q_{k+1}`` are removed from the graph.
    """
    _check_shape(dag, z)
    graph: NodeGraph = dag
    target = dag.outcome
    out: list[frozenset[str]] = [frozenset()] * (dag.p + 1)
    for k in range(dag.p, -1, -1):
        a_k = dag.treatments[k]
        retained = set(z[k])
        for v in sorted(z[k], key=graph.index.__getitem__, reverse=True):
            cond = graph.mask(retained - {v}) | graph.mask([a_k])
            if separated_mask(graph, graph.mask([v]), graph.mask([target]), cond):
                retained.discard(v)
                if trace is not None:
                    trace.dropped.append((k, v))
        out[k] = frozenset(retained)
        if trace is not None:
            trace.retained.insert(0, out[k])
            trace.graphs.append(graph)
        # modified graph for the next step
        q = _q_name(graph, k)
        pmap = {v: ps for v, ps in graph.parent_map().items() if v not in (a_k, target)}
        pmap = {v: frozenset(ps - {a_k, target}) for v, ps in pmap.items()}
        pmap[q] = frozenset(retained)
        names = [v for v in graph.names if v not in (a_k, target)] + [q]
        graph = NodeGraph(names, pmap)
        target = q
    return AdjustmentSet(tuple(out))


# --- Definition 2 ---------------------------------------------------------


def is_sufficient_def2(dag: Dag, z: AdjustmentSet, oracle_draws: int = DEFAULT_ORACLE_DRAWS, seed: int = 0) -> bool:
    """Exact randomized test of the nested identification formula.

    For each of ``oracle_draws`` random binary models compatible with
    ``dag`` (rational CPT entries), the nested formula must equal the
    g-formula value of ``E[Y^a]`` exactly for every binary regime.  If the
    draws disagree the result is indeterminate and
    :class:`IndeterminateError` is raised.
    """
    from .discrete import oracle_models

    if oracle_draws < 3:
        raise AdjustmentError("oracle_draws must be at least 3")
    _check_shape(dag, z)
    verdicts = [model.identifies(z) for model in oracle_models(dag, oracle_draws, seed)]
    if all(verdicts):
        return True
    if not any(verdicts):
        return False
    raise IndeterminateError(f"oracle draws disagree for {z.label(dag)}: {verdicts}")


@dataclass(frozen=True)
class Decomposition:
    """``Z`` seen as a definition-1 set ``K`` minus removed history ``R``."""

    entered: tuple[frozenset[str], ...]  # K_k: covariates first used at time k
    removed: tuple[frozenset[str], ...]  # R_k: history members dropped from Z_k

    @property
    def full_history(self) -> bool:
        return not any(self.removed)


def decompose(dag: Dag, z: AdjustmentSet) -> Decomposition:
    entered = []
    removed = []
    seen_cov: frozenset[str] = frozenset()
    history: frozenset[str] = frozenset()
    for k, part in enumerate(z):
        cov = z.covariates(dag, k)
        new = cov - seen_cov
        entered.append(new)
        if k > 0:
            history = history | {dag.treatments[k - 1]}
        history = history | new
        removed.append(history - part)
        seen_cov = seen_cov | cov
    return Decomposition(tuple(entered), tuple(removed))


def candidate_sets(dag: Dag, max_universe: int = DEFAULT_MAX_UNIVERSE) -> list[AdjustmentSet]:
    """All well-formed sets: each covariate enters at an allowed time and may
    then be kept or dropped later; any past treatment may be held fixed."""
    size = 1
    for k in range(dag.p + 1):
        size *= 2 ** len(eligible(dag, k))
    if size > max_universe:
        raise UniverseSizeError(f"candidate universe {size} exceeds max_universe={max_universe}")
    fresh = [[c for c in dag.covariates if k in entry_times(dag, c)] for k in range(dag.p + 1)]

    def subsets(items):
        items = list(items)
        for r in range(len(items) + 1):
            for combo in combinations(items, r):
                yield frozenset(combo)

    out: list[AdjustmentSet] = []

    def extend(k, parts, carried):
        if k > dag.p:
            out.append(AdjustmentSet(tuple(parts)))
            return
        pool = set(dag.treatments[:k]) | carried | set(fresh[k])
        pool_sorted = sorted(pool, key=dag.index.__getitem__)
        for part in subsets(pool_sorted):
            cov = frozenset(v for v in part if dag.roles[v].is_covariate)
            extend(k + 1, parts + [part], carried | cov)

    extend(0, [], frozenset())
    return out


@dataclass(frozen=True)
class EnumeratedSet:
    number: int
    z: AdjustmentSet
    def1: bool
    decomposition: Decomposition

    def to_json(self, dag: Dag) -> dict:
        return {
            "number": self.number,
            "sets": self.z.to_json(dag),
            "label": self.z.label(dag),
            "definition1": self.def1,
        }


def _subset_key(dag: Dag, s: frozenset[str], empty_last: bool = False) -> tuple:
    keys = tuple(sorted(dag.role_key(v) for v in s))
    return ((not s) if empty_last else False, len(s), keys)


def numbering_key(dag: Dag, z: AdjustmentSet, def1: bool) -> tuple:
    """Sort key reproducing the row order used in published tables.

    Definition-1 sets come first, ordered by the covariates entering at
    each time (an empty later entry sorts last).  The others are grouped by
    their time-0 set, then by which history members were removed, then by
    entered covariates.
    """
    d = decompose(dag, z)
    head = (not def1, _subset_key(dag, d.entered[0]))
    later = tuple(_subset_key(dag, s, empty_last=True) for s in d.entered[1:])
    if def1:
        return head + later
    removed = tuple(_subset_key(dag, s) for s in d.removed[1:])
    return head + removed + later


def enumerate_def2_sets(
    dag: Dag,
    oracle_draws: int = DEFAULT_ORACLE_DRAWS,
    max_universe: int = DEFAULT_MAX_UNIVERSE,
    seed: int = 0,
) -> list[EnumeratedSet]:
    """Every candidate set passing the definition-2 oracle, numbered.

    Each set is tagged ``def1`` when it is the definition-2 rewriting of a
    covariate set satisfying sequential exchangeability.
    """
    from .discrete import oracle_models

    if oracle_draws < 3:
        raise AdjustmentError("oracle_draws must be at least 3")
    models = oracle_models(dag, oracle_draws, seed)
    swig = build_swig(dag)
    found = []
    for z in candidate_sets(dag, max_universe):
        verdicts = [m.identifies(z) for m in models]
        if not any(verdicts):
            continue
        if not all(verdicts):
            raise IndeterminateError(f"oracle draws disagree for {z.label(dag)}")
        d = decompose(dag, z)
        def1 = d.full_history and sequential_exchangeability_holds(swig, AdjustmentSet(d.entered))
        found.append((numbering_key(dag, z, def1), z, def1, d))
    found.sort(key=lambda item: item[0])
    return [EnumeratedSet(i + 1, z, def1, d) for i, (_, z, def1, d) in enumerate(found)]


def find_set(sets: Sequence[EnumeratedSet], z: AdjustmentSet) -> EnumeratedSet | None:
    for s in sets:
        if s.z == z:
            return s
    return None


def def1_sets(dag: Dag) -> list[AdjustmentSet]:
    """All covariate sets ``K`` (in definition-1 notation) satisfying sequential
    exchangeability, with each covariate entering at an allowed time."""
    fresh = [[c for c in dag.covariates if k in entry_times(dag, c)] for k in range(dag.p + 1)]
    swig = build_swig(dag)
    out: list[AdjustmentSet] = []

    def extend(k, parts, used):
        if k > dag.p:
            z = AdjustmentSet(tuple(parts))
            if sequential_exchangeability_holds(swig, z):
                out.append(z)
            return
        pool = [c for c in fresh[k] if c not in used]
        for r in range(len(pool) + 1):
            for combo in combinations(pool, r):
                extend(k + 1, parts + [frozenset(combo)], used | set(combo))

    extend(0, [], frozenset())
    return out
