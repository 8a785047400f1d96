"""d-separation queries on directed acyclic node graphs."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from .graph import NodeGraph, _bits

__all__ = ["DsepQuery", "DsepQueryError", "d_separated", "d_separated_oracle", "reachable_mask", "separated_mask"]

ORACLE_MAX_NODES = 12


class DsepQueryError(ValueError):
    pass


@dataclass(frozen=True)
class DsepQuery:
    """Is ``x`` independent of ``y`` given ``z``?"""

    x: frozenset[str]
    y: frozenset[str]
    z: frozenset[str] = frozenset()

    @classmethod
    def of(cls, x: Iterable[str], y: Iterable[str], z: Iterable[str] = ()) -> "DsepQuery":
        return cls(frozenset(x), frozenset(y), frozenset(z))

    def validate(self, graph: NodeGraph) -> None:
        for part in (self.x, self.y, self.z):
            for v in part:
                if v not in graph:
                    raise DsepQueryError(f"unknown node {v!r}")
        if self.x & self.y or self.x & self.z or self.y & self.z:
            raise DsepQueryError("query sets must be pairwise disjoint")

    def to_json(self, order: NodeGraph | None = None) -> dict:
        key = (lambda v: order.index[v]) if order is not None else str
        return {part: sorted(getattr(self, part), key=key) for part in ("x", "y", "z")}

    def __str__(self) -> str:
        def fmt(s):
            return "{" + ", ".join(sorted(s)) + "}"

        return f"{fmt(self.x)} _||_ {fmt(self.y)} | {fmt(self.z)}"


def reachable_mask(graph: NodeGraph, source: int, given: int) -> int:
    """Nodes d-connected to ``source`` given ``given`` (Bayes-ball reachability).

    Linear in the size of the graph.  ``given`` nodes are never returned.
    """
    anc_given = graph.ancestors_mask(given)
    pa, ch = graph.pa, graph.ch
    # state bit 0: arrived from a child (moving up), bit 1: from a parent (moving down)
    seen_up = 0
    seen_down = 0
    stack = [(i, True) for i in _bits(source)]
    reach = 0
    while stack:
        i, up = stack.pop()
        bit = 1 << i
        if up:
            if seen_up & bit:
                continue
            seen_up |= bit
        else:
            if seen_down & bit:
                continue
            seen_down |= bit
        observed = given & bit
        if not observed:
            reach |= bit
        if up and not observed:
            for q in _bits(pa[i]):
                stack.append((q, True))
            for q in _bits(ch[i]):
                stack.append((q, False))
        elif not up:
            if not observed:
                for q in _bits(ch[i]):
                    stack.append((q, False))
            if anc_given & bit:
                for q in _bits(pa[i]):
                    stack.append((q, True))
    return reach


def separated_mask(graph: NodeGraph, x: int, y: int, z: int) -> bool:
    if not x or not y:
        return True
    return not (reachable_mask(graph, x, z) & y)


def d_separated(graph: NodeGraph, x, y=None, z=()) -> bool:
    """True iff every path between ``x`` and ``y`` is blocked by ``z``.

    Accepts either a :class:`DsepQuery` or three node collections.  Empty
    ``x`` or ``y`` is vacuously separated.
    """
    q = x if isinstance(x, DsepQuery) else DsepQuery.of(x, y, z)
    q.validate(graph)
    return separated_mask(graph, graph.mask(q.x), graph.mask(q.y), graph.mask(q.z))


def _path_blocked(graph: NodeGraph, path: list[int], z: int) -> bool:
    desc_or_self = [graph.de[i] | (1 << i) for i in range(len(graph.names))]
    for a, b, c in zip(path, path[1:], path[2:]):
        collider = (graph.pa[b] >> a) & 1 and (graph.pa[b] >> c) & 1
        if collider:
            if not desc_or_self[b] & z:
                return True
        elif (z >> b) & 1:
            return True
    return False


def _simple_paths(graph: NodeGraph, start: int, targets: int):
    adj = [graph.pa[i] | graph.ch[i] for i in range(len(graph.names))]
    path = [start]
    on_path = 1 << start

    def walk(i):
        nonlocal on_path
        if i != start and (targets >> i) & 1:
            yield list(path)
            return
        for q in _bits(adj[i] & ~on_path):
            path.append(q)
            on_path |= 1 << q
            yield from walk(q)
            path.pop()
            on_path &= ~(1 << q)

    yield from walk(start)


def d_separated_oracle(graph: NodeGraph, x, y=None, z=()) -> bool:
    """Reference answer by enumerating every undirected simple path.

    Exponential; only meant for cross-checking :func:`d_separated` on
    small graphs.
    """
    if len(graph.names) > ORACLE_MAX_NODES:
        raise DsepQueryError(f"oracle limited to {ORACLE_MAX_NODES} nodes")
    q = x if isinstance(x, DsepQuery) else DsepQuery.of(x, y, z)
    q.validate(graph)
    ym = graph.mask(q.y)
    zm = graph.mask(q.z)
    for s in q.x:
        for path in _simple_paths(graph, graph.index[s], ym):
            if not _path_blocked(graph, path, zm):
                return False
    return True


def all_subsets(items):
    items = list(items)
    for r in range(len(items) + 1):
        yield from combinations(items, r)
