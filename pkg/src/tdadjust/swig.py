"""Single-world intervention graphs and sequential exchangeability."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .dsep import separated_mask
from .graph import Dag, NodeGraph, _bits

if TYPE_CHECKING:
    from .adjustment import AdjustmentSet

__all__ = ["Regime", "Swig", "build_swig", "sequential_exchangeability_holds"]


@dataclass(frozen=True)
class Regime:
    """Static treatment regime ``(a_0, ..., a_p)``."""

    a: tuple[int | float, ...]

    @classmethod
    def of(cls, *values) -> "Regime":
        if len(values) == 1 and isinstance(values[0], (tuple, list)):
            values = tuple(values[0])
        return cls(tuple(values))

    def validate(self, dag: Dag, supports: dict[str, Sequence] | None = None) -> None:
        if len(self.a) != dag.p + 1:
            raise ValueError(f"regime has length {len(self.a)}, expected {dag.p + 1}")
        supports = supports or {}
        for name, value in zip(dag.treatments, self.a):
            allowed = supports.get(name, (0, 1))
            if value not in allowed:
                raise ValueError(f"{name}={value} outside support {tuple(allowed)}")

    def __len__(self) -> int:
        return len(self.a)

    def __getitem__(self, k: int):
        return self.a[k]

    def __str__(self) -> str:
        return "".join(str(v) for v in self.a) if all(v in (0, 1) for v in self.a) else str(self.a)


def _fixed_name(dag: Dag, treatment: str) -> str:
    name = treatment.lower() if treatment.lower() != treatment else treatment + "_fixed"
    while name in dag.index:
        name += "'"
    return name


class Swig(NodeGraph):
    """Treatment nodes split into a random half (keeps the original name and
    incoming edges) and a fixed half (in-degree 0, keeps outgoing edges).

    Attributes
    ----------
    base : Dag
        The observational graph.
    fixed : dict
        Treatment name -> name of its fixed half.
    labels : dict
        Counterfactual display label for every node; nodes downstream of a
        fixed half carry the fixed values they depend on, e.g. ``Y^{a0,a1}``.
    """

    def __init__(self, dag: Dag):
        fixed = {a: _fixed_name(dag, a) for a in dag.treatments}
        names: list[str] = []
        for v in dag.names:
            names.append(v)
            if v in fixed:
                names.append(fixed[v])
        pmap: dict[str, set[str]] = {v: set() for v in names}
        for u, v in dag.edges:
            pmap[v].add(fixed.get(u, u))
        super().__init__(names, pmap)
        self.base = dag
        self.fixed = fixed
        self.random = {h: a for a, h in fixed.items()}
        labels = {}
        for v in names:
            if v in self.random:
                labels[v] = v
                continue
            anc = [h for h in fixed.values() if (self.an[self.index[v]] >> self.index[h]) & 1]
            labels[v] = v + ("^{" + ",".join(anc) + "}" if anc else "")
        self.labels = labels

    @property
    def relabeled(self) -> frozenset[str]:
        return frozenset(v for v, lab in self.labels.items() if lab != v)

    @property
    def outcome(self) -> str:
        return self.base.outcome


def build_swig(dag: Dag) -> Swig:
    return Swig(dag)


def sequential_exchangeability_holds(swig: Swig, z: "AdjustmentSet") -> bool:
    """``Y^a`` independent of ``A_k`` given ``A_0..A_{k-1}`` and ``Z_0..Z_k``, for every k.

    Conditioning uses the random treatment halves.  ``z`` may hold past
    treatments; they are among the conditioning set anyway.  Fixed halves
    are constants, so paths through them are always blocked.
    """
    dag = swig.base
    if len(z) != dag.p + 1:
        raise ValueError(f"adjustment set has {len(z)} parts, expected {dag.p + 1}")
    y = swig.mask([dag.outcome])
    history = swig.mask(swig.fixed.values())
    for k, part in enumerate(z):
        for v in part:
            if v not in dag.roles or dag.roles[v].is_outcome:
                raise ValueError(f"invalid member {v!r} of Z_{k}")
            role = dag.roles[v]
            if role.is_treatment and role.k >= k:
                raise ValueError(f"Z_{k} cannot contain {v}")
        history |= swig.mask(part)
        if k > 0:
            history |= swig.mask([dag.treatments[k - 1]])
        a_k = swig.mask([dag.treatments[k]])
        if not separated_mask(swig, a_k, y, history):
            return False
    return True
