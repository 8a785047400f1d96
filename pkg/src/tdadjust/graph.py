"""Role-annotated causal DAGs for longitudinal treatment studies.

A graph file is UTF-8 text with one statement per line::

    # comment
    node C01 role=covariate k=0 j=1
    node A0 role=treatment k=0
    node Y role=outcome
    edge C01 -> A0

Node sets are handled internally as integer bitsets keyed by the node's
position in the deterministic topological order.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

__all__ = [
    "Role",
    "NodeGraph",
    "Dag",
    "GraphError",
    "GraphParseError",
    "GraphValidationError",
    "parse_dag",
    "load_dag",
    "topological_order",
    "parents",
    "ancestors",
    "descendants",
]


class GraphError(ValueError):
    """Base class for graph construction failures."""


class GraphParseError(GraphError):
    def __init__(self, line: int, column: int, message: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class GraphValidationError(GraphError):
    pass


@dataclass(frozen=True, order=True)
class Role:
    """Treatment A_k, covariate C_{k,j} or the outcome Y."""

    kind: str  # "covariate" | "treatment" | "outcome"
    k: int = -1
    j: int = 0

    @property
    def is_treatment(self) -> bool:
        return self.kind == "treatment"

    @property
    def is_covariate(self) -> bool:
        return self.kind == "covariate"

    @property
    def is_outcome(self) -> bool:
        return self.kind == "outcome"

    def sort_key(self, p: int) -> tuple:
        if self.kind == "covariate":
            return (self.k, 0, self.j)
        if self.kind == "treatment":
            return (self.k, 1, 0)
        return (p + 1, 2, 0)

    def to_text(self) -> str:
        if self.kind == "covariate":
            return f"role=covariate k={self.k} j={self.j}"
        if self.kind == "treatment":
            return f"role=treatment k={self.k}"
        return "role=outcome"


def _bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class NodeGraph:
    """Immutable directed acyclic structure over named nodes.

    ``names`` must already be in a topological order; every parent of node
    ``i`` has an index smaller than ``i``.  This is the common substrate for
    DAGs, SWIGs and the modified graphs built while reducing adjustment sets.
    """

    def __init__(self, names: Iterable[str], parent_map: dict[str, Iterable[str]]):
        self.names: tuple[str, ...] = tuple(names)
        self.index: dict[str, int] = {v: i for i, v in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise GraphValidationError("duplicate node names")
        n = len(self.names)
        pa = [0] * n
        ch = [0] * n
        for child, ps in parent_map.items():
            ci = self.index[child]
            for par in ps:
                pi = self.index[par]
                if pi >= ci:
                    raise GraphValidationError(
                        f"node order is not topological: {par} -> {child}"
                    )
                pa[ci] |= 1 << pi
                ch[pi] |= 1 << ci
        self.pa: tuple[int, ...] = tuple(pa)
        self.ch: tuple[int, ...] = tuple(ch)
        an = [0] * n
        for i in range(n):
            m = 0
            for q in _bits(pa[i]):
                m |= an[q] | (1 << q)
            an[i] = m
        de = [0] * n
        for i in reversed(range(n)):
            m = 0
            for q in _bits(ch[i]):
                m |= de[q] | (1 << q)
            de[i] = m
        self.an: tuple[int, ...] = tuple(an)
        self.de: tuple[int, ...] = tuple(de)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, v: object) -> bool:
        return v in self.index

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return frozenset(
            (self.names[p], self.names[c])
            for c in range(len(self.names))
            for p in _bits(self.pa[c])
        )

    def mask(self, nodes: Iterable[str]) -> int:
        m = 0
        for v in nodes:
            try:
                m |= 1 << self.index[v]
            except KeyError:
                raise GraphValidationError(f"unknown node {v!r}") from None
        return m

    def names_of(self, mask: int) -> tuple[str, ...]:
        return tuple(self.names[i] for i in _bits(mask))

    def _idx(self, v: str) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise GraphValidationError(f"unknown node {v!r}") from None

    def parents(self, v: str) -> frozenset[str]:
        return frozenset(self.names_of(self.pa[self._idx(v)]))

    def children(self, v: str) -> frozenset[str]:
        return frozenset(self.names_of(self.ch[self._idx(v)]))

    def ancestors(self, v: str) -> frozenset[str]:
        return frozenset(self.names_of(self.an[self._idx(v)]))

    def descendants(self, v: str) -> frozenset[str]:
        return frozenset(self.names_of(self.de[self._idx(v)]))

    def ancestors_mask(self, mask: int) -> int:
        """Ancestors of a node set, the set itself included."""
        out = mask
        for i in _bits(mask):
            out |= self.an[i]
        return out

    def descendants_mask(self, mask: int) -> int:
        out = 0
        for i in _bits(mask):
            out |= self.de[i]
        return out

    def parent_map(self) -> dict[str, frozenset[str]]:
        return {v: frozenset(self.names_of(self.pa[i])) for i, v in enumerate(self.names)}


class Dag(NodeGraph):
    """Causal DAG with treatment / covariate / outcome roles.

    Nodes are stored in the deterministic topological order: Kahn's
    algorithm with ties broken by (time index, role class, j, name).
    """

    def __init__(self, roles: dict[str, Role], edges: Iterable[tuple[str, str]]):
        roles = dict(roles)
        edges = frozenset(edges)
        _validate_roles(roles, edges)
        order = _kahn(roles, edges)
        parent_map: dict[str, set[str]] = {v: set() for v in roles}
        for u, v in edges:
            parent_map[v].add(u)
        super().__init__(order, parent_map)
        self.roles: dict[str, Role] = roles
        treatments = sorted((r.k, v) for v, r in roles.items() if r.is_treatment)
        self.treatments: tuple[str, ...] = tuple(v for _, v in treatments)
        self.p: int = len(self.treatments) - 1
        self.outcome: str = next(v for v, r in roles.items() if r.is_outcome)
        self.covariates: tuple[str, ...] = tuple(v for v in self.names if roles[v].is_covariate)
        counts = [0] * (self.p + 1)
        for v in self.covariates:
            if roles[v].k <= self.p:
                counts[roles[v].k] += 1
        self.n_ck: tuple[int, ...] = tuple(counts)
        _check_temporal(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self.roles == other.roles and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((frozenset(self.roles.items()), self.edges))

    def __repr__(self) -> str:
        return f"Dag(p={self.p}, nodes={len(self.names)}, edges={len(self.edges)})"

    def role_key(self, v: str) -> tuple:
        """Ordering key used for canonical display of node sets."""
        return self.roles[v].sort_key(self.p) + (v,)

    def serialize(self) -> str:
        lines = [f"node {v} {self.roles[v].to_text()}" for v in self.names]
        lines += [f"edge {u} -> {v}" for u, v in sorted(self.edges, key=lambda e: (self.index[e[0]], self.index[e[1]]))]
        return "\n".join(lines) + "\n"


def _validate_roles(roles: dict[str, Role], edges: frozenset[tuple[str, str]]) -> None:
    outcomes = [v for v, r in roles.items() if r.is_outcome]
    if len(outcomes) != 1:
        raise GraphValidationError(f"role violation: expected exactly one outcome, found {len(outcomes)}")
    ks = sorted(r.k for r in roles.values() if r.is_treatment)
    if not ks:
        raise GraphValidationError("role violation: no treatment nodes")
    if ks != list(range(len(ks))):
        raise GraphValidationError(f"role violation: treatment indices {ks} are not 0..p without gaps")
    seen: set[tuple[int, int]] = set()
    for v, r in roles.items():
        if r.is_covariate:
            if r.k < 0 or r.k > ks[-1] or r.j < 1:
                raise GraphValidationError(f"role violation: bad covariate index for {v}")
            if (r.k, r.j) in seen:
                raise GraphValidationError(f"role violation: duplicate covariate index ({r.k},{r.j}) at {v}")
            seen.add((r.k, r.j))
    y = outcomes[0]
    for u, v in edges:
        if u not in roles or v not in roles:
            raise GraphValidationError(f"unknown endpoint in edge {u} -> {v}")
        if u == y:
            raise GraphValidationError(f"role violation: outcome {y} must be terminal (edge {u} -> {v})")


def _kahn(roles: dict[str, Role], edges: frozenset[tuple[str, str]]) -> list[str]:
    p = max(r.k for r in roles.values() if r.is_treatment)
    indeg = {v: 0 for v in roles}
    children: dict[str, list[str]] = {v: [] for v in roles}
    for u, v in edges:
        indeg[v] += 1
        children[u].append(v)
    heap = [(roles[v].sort_key(p), v) for v, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, v = heapq.heappop(heap)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, (roles[c].sort_key(p), c))
    if len(order) != len(roles):
        stuck = sorted(v for v, d in indeg.items() if d > 0)
        raise GraphValidationError(f"cycle detected among {stuck}")
    return order


def _check_temporal(dag: Dag) -> None:
    # every A_j (j<k) and covariate with time index <= k must precede A_k
    for k, a in enumerate(dag.treatments):
        ai = dag.index[a]
        for v, r in dag.roles.items():
            earlier = (r.is_treatment and r.k < k) or (r.is_covariate and r.k <= k)
            if earlier and (dag.de[ai] >> dag.index[v]) & 1:
                raise GraphValidationError(f"role violation: {v} is a descendant of {a}")


_NODE_RE = re.compile(r"^node\s+(\S+)\s*(.*)$")
_EDGE_RE = re.compile(r"^edge\s+(\S+)\s*->\s*(\S+)\s*$")
_ATTR_RE = re.compile(r"(\w+)=(\S+)")


def parse_dag(text: str) -> Dag:
    """Parse graph-file text into a validated :class:`Dag`."""
    roles: dict[str, Role] = {}
    edges: list[tuple[str, str]] = []
    edge_lines: list[tuple[int, int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.lstrip()
        if not stripped:
            continue
        col = len(line) - len(stripped) + 1
        if stripped.startswith("node"):
            m = _NODE_RE.match(stripped)
            if m is None:
                raise GraphParseError(lineno, col, "expected 'node <name> role=...'")
            name, rest = m.group(1), m.group(2)
            if name in roles:
                raise GraphParseError(lineno, col + 5, f"duplicate node {name!r}")
            roles[name] = _parse_role(rest, lineno, col + stripped.find(rest) if rest else col)
        elif stripped.startswith("edge"):
            m = _EDGE_RE.match(stripped)
            if m is None:
                raise GraphParseError(lineno, col, "expected 'edge <from> -> <to>'")
            edge_lines.append((lineno, col, m.group(1), m.group(2)))
        else:
            raise GraphParseError(lineno, col, f"unknown statement {stripped.split()[0]!r}")
    for lineno, col, u, v in edge_lines:
        for end in (u, v):
            if end not in roles:
                raise GraphParseError(lineno, col, f"unknown endpoint {end!r}")
        edges.append((u, v))
    return Dag(roles, edges)


def _parse_role(rest: str, lineno: int, col: int) -> Role:
    attrs = dict(_ATTR_RE.findall(rest))
    leftover = _ATTR_RE.sub("", rest).strip()
    if leftover:
        raise GraphParseError(lineno, col, f"unexpected text {leftover!r}")
    kind = attrs.pop("role", None)
    try:
        if kind == "treatment":
            role = Role("treatment", int(attrs.pop("k")))
        elif kind == "covariate":
            role = Role("covariate", int(attrs.pop("k")), int(attrs.pop("j")))
        elif kind == "outcome":
            role = Role("outcome")
        else:
            raise GraphParseError(lineno, col, f"unknown role {kind!r}")
    except KeyError as exc:
        raise GraphParseError(lineno, col, f"missing attribute {exc.args[0]!r}") from None
    except ValueError:
        raise GraphParseError(lineno, col, "time indices must be integers") from None
    if attrs:
        raise GraphParseError(lineno, col, f"unexpected attributes {sorted(attrs)}")
    return role


def load_dag(path) -> Dag:
    """Read a graph file, or one of the bundled graphs by name (``example1``)."""
    from importlib import resources
    from pathlib import Path

    path_obj = Path(path)
    if not path_obj.exists() and not path_obj.suffix:
        bundled = resources.files("tdadjust") / "graphs" / f"{path}.graph"
        if bundled.is_file():
            return parse_dag(bundled.read_text(encoding="utf-8"))
    return parse_dag(path_obj.read_text(encoding="utf-8"))


def topological_order(dag: NodeGraph) -> list[str]:
    return list(dag.names)


def parents(dag: NodeGraph, v: str) -> frozenset[str]:
    return dag.parents(v)


def ancestors(dag: NodeGraph, v: str) -> frozenset[str]:
    return dag.ancestors(v)


def descendants(dag: NodeGraph, v: str) -> frozenset[str]:
    return dag.descendants(v)
