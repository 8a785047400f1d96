"""Linear structural causal models and dataset simulation.

Each node has an equation ``V = intercept + sum(coef * parent) + noise``
(identity link) or ``V ~ Bernoulli(expit(intercept + sum(coef * parent)))``
(expit link).  Noise is a truncated normal drawn by rejection.

Random streams
--------------
Every draw comes from numpy's PCG64 seeded with
``SeedSequence([seed, replication, node_position])`` (``replication`` is
omitted for standalone datasets).  A node's values therefore depend only on
the seed, the replication index and the node, never on batch layout or
worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .graph import Dag, load_dag

__all__ = [
    "NoiseLaw",
    "Equation",
    "ScmSpec",
    "ScmError",
    "Dataset",
    "sample_truncnorm",
    "simulate_dataset",
    "simulate_batch",
    "builtin_scm",
    "BUILTINS",
    "load_scm",
]

LINKS = ("identity", "expit-bernoulli")


class ScmError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseLaw:
    """Normal(mu, sigma2) truncated to [min, max]."""

    mu: float = 0.0
    sigma2: float = 1.0
    min: float = -math.inf
    max: float = math.inf

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ScmError("sigma2 must be positive")
        if not self.min < self.max:
            raise ScmError("truncation bounds need min < max")

    @property
    def mean(self) -> float:
        """Mean of the truncated law."""
        from scipy.stats import truncnorm

        sd = math.sqrt(self.sigma2)
        return float(truncnorm.mean((self.min - self.mu) / sd, (self.max - self.mu) / sd, loc=self.mu, scale=sd))

    def to_json(self) -> dict:
        return {"type": "truncnormal", "mu": self.mu, "sigma2": self.sigma2, "min": self.min, "max": self.max}


STANDARD_TN = NoiseLaw(0.0, 1.0, -2.0, 2.0)


def sample_truncnorm(law: NoiseLaw, rng: np.random.Generator, size: int | tuple = 1) -> np.ndarray:
    """Rejection sampling from the untruncated normal.

    Rejected positions are redrawn until every value lies in
    ``[law.min, law.max]``; the output is a deterministic function of the
    generator state.
    """
    sd = math.sqrt(law.sigma2)
    out = rng.normal(law.mu, sd, size=size)
    bad = (out < law.min) | (out > law.max)
    while bad.any():
        k = int(bad.sum())
        out[bad] = rng.normal(law.mu, sd, size=k)
        bad = (out < law.min) | (out > law.max)
    return out


@dataclass(frozen=True)
class Equation:
    node: str
    intercept: float = 0.0
    coef: dict[str, float] = field(default_factory=dict)
    noise: NoiseLaw | None = None
    link: str = "identity"

    def to_json(self) -> dict:
        return {
            "node": self.node,
            "intercept": self.intercept,
            "coef": dict(self.coef),
            "noise": self.noise.to_json() if self.noise is not None else None,
            "link": self.link,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Equation":
        noise = obj.get("noise")
        if noise is not None:
            if noise.get("type", "truncnormal") != "truncnormal":
                raise ScmError(f"unknown noise type {noise.get('type')!r}")
            noise = NoiseLaw(
                float(noise.get("mu", 0.0)),
                float(noise.get("sigma2", 1.0)),
                float(noise.get("min", -math.inf)),
                float(noise.get("max", math.inf)),
            )
        return cls(
            obj["node"],
            float(obj.get("intercept", 0.0)),
            {k: float(v) for k, v in obj.get("coef", {}).items()},
            noise,
            obj.get("link", "identity"),
        )


class ScmSpec:
    """Structural equations for every node of ``dag``, in topological order."""

    def __init__(self, dag: Dag, equations: Iterable[Equation], name: str = "custom"):
        eqs = {e.node: e for e in equations}
        self.dag = dag
        self.name = name
        missing = set(dag.names) - set(eqs)
        if missing:
            raise ScmError(f"no equation for {sorted(missing)}")
        extra = set(eqs) - set(dag.names)
        if extra:
            raise ScmError(f"equations for unknown nodes {sorted(extra)}")
        for v, e in eqs.items():
            if e.link not in LINKS:
                raise ScmError(f"{v}: unknown link {e.link!r}")
            bad = set(e.coef) - dag.parents(v)
            if bad:
                raise ScmError(f"{v}: coefficients for non-parents {sorted(bad)}")
            if dag.roles[v].is_treatment and e.link != "expit-bernoulli":
                raise ScmError(f"treatment {v} must use the expit-bernoulli link")
            if e.link == "identity" and e.noise is None:
                raise ScmError(f"{v}: identity link needs a noise law")
        self.equations: tuple[Equation, ...] = tuple(eqs[v] for v in dag.names)

    def __getitem__(self, v: str) -> Equation:
        return self.equations[self.dag.index[v]]

    def to_json(self) -> dict:
        return {"name": self.name, "equations": [e.to_json() for e in self.equations]}

    @classmethod
    def from_json(cls, dag: Dag, obj: dict | list) -> "ScmSpec":
        if isinstance(obj, list):
            obj = {"equations": obj}
        return cls(dag, [Equation.from_json(e) for e in obj["equations"]], obj.get("name", "custom"))


def load_scm(dag: Dag, path: str | Path) -> ScmSpec:
    with open(path, encoding="utf-8") as fh:
        return ScmSpec.from_json(dag, json.load(fh))


@dataclass
class Dataset:
    """Column-major table; ``columns`` follows the topological order."""

    columns: tuple[str, ...]
    data: dict[str, np.ndarray]

    @property
    def n(self) -> int:
        return len(self.data[self.columns[0]]) if self.columns else 0

    def __getitem__(self, v: str) -> np.ndarray:
        return self.data[v]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        cols = [self.data[c] for c in self.columns]
        for row in zip(*cols):
            w.writerow([repr(float(x)) if not float(x).is_integer() else str(int(x)) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _node_rng(key: Sequence[int], node_pos: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(key) + [node_pos])))


def _draw_node(eq: Equation, values: dict[str, np.ndarray], rng: np.random.Generator, shape) -> np.ndarray:
    lin = np.full(shape, eq.intercept, dtype=float)
    for parent, c in eq.coef.items():
        lin = lin + c * values[parent]
    if eq.link == "expit-bernoulli":
        return (rng.random(shape) < expit(lin)).astype(float)
    return lin + sample_truncnorm(eq.noise, rng, shape)


def simulate_dataset(scm: ScmSpec, n: int, seed: int, replication: int | None = None) -> Dataset:
    """Draw ``n`` i.i.d. rows by evaluating the equations in topological order."""
    if n < 0:
        raise ScmError("n must be non-negative")
    key = [int(seed)] if replication is None else [int(seed), int(replication)]
    values: dict[str, np.ndarray] = {}
    for pos, eq in enumerate(scm.equations):
        values[eq.node] = _draw_node(eq, values, _node_rng(key, pos), (n,))
    return Dataset(scm.dag.names, values)


def simulate_batch(scm: ScmSpec, n: int, seed: int, replications: Sequence[int]) -> dict[str, np.ndarray]:
    """Stacked datasets, shape ``(len(replications), n)`` per node.

    Row ``i`` equals ``simulate_dataset(scm, n, seed, replications[i])``.
    """
    out: dict[str, np.ndarray] = {v: np.empty((len(replications), n)) for v in scm.dag.names}
    for i, r in enumerate(replications):
        ds = simulate_dataset(scm, n, seed, r)
        for v in scm.dag.names:
            out[v][i] = ds.data[v]
    return out


# --- built-in models ------------------------------------------------------


def _tn() -> NoiseLaw:
    return STANDARD_TN


# A1's equation is not printed in the source.  The default coefficients were
# picked from a 0.25-step grid by matching the published Monte Carlo SDs;
# ``example1_unit`` keeps the unit-coefficient reading for comparison.
A1_CALIBRATED = {"C02": 0.75, "A0": 0.5, "C11": 0.5}
A1_UNIT = {"C02": 1.0, "A0": 1.0, "C11": 1.0}


def _example1(a1_coef: dict[str, float] = A1_CALIBRATED, name: str = "example1") -> ScmSpec:
    dag = load_dag("example1")
    bern = "expit-bernoulli"
    eqs = [
        Equation("C01", noise=_tn()),
        Equation("C02", coef={"C01": 1.0}, noise=_tn()),
        Equation("A0", coef={"C01": 1.0}, link=bern),
        Equation("C11", coef={"A0": 1.0, "C02": 1.0}, noise=_tn()),
        Equation("C12", coef={"C11": 1.0}, noise=_tn()),
        Equation("A1", coef=dict(a1_coef), link=bern),
        Equation("Y", coef={"A1": 1.0, "A0": 1.0, "C12": 1.0}, noise=_tn()),
    ]
    return ScmSpec(dag, eqs, name)


def _example2(h_to_r: float, name: str) -> ScmSpec:
    dag = load_dag("example2")
    bern = "expit-bernoulli"
    eqs = [
        Equation("A0", intercept=0.5, link=bern),
        Equation("H", noise=_tn()),
        Equation("R", coef={"A0": 1.0, "H": h_to_r}, noise=_tn()),
        Equation("Q", coef={"R": 1.0}, noise=_tn()),
        Equation("A1", coef={"H": 3.0}, link=bern),
        Equation("Y", coef={"A1": 1.0, "Q": 1.0}, noise=_tn()),
    ]
    return ScmSpec(dag, eqs, name)


BUILTINS = {
    "example1": _example1,
    "example1_unit": lambda: _example1(A1_UNIT, "example1_unit"),
    "example2_strong_HA1": lambda: _example2(2.5, "example2_strong_HA1"),
    "example2_strong_HRQ": lambda: _example2(4.0, "example2_strong_HRQ"),
}


def builtin_scm(name: str) -> ScmSpec:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise ScmError(f"unknown builtin SCM {name!r}; choose from {sorted(BUILTINS)}") from None
