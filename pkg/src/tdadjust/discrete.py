"""Exact binary models for oracle checks.

Every node is binary; ``P(v = 1 | parents)`` is a rational ``m/DENOM`` with
``m`` drawn uniformly from ``1..DENOM-1`` for each parent configuration.  All
population quantities are computed by enumerating the ``2^n`` joint
configurations with exact :class:`fractions.Fraction` arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .eif import assemble_psi, cumulative, r_terms
from .graph import Dag, _bits

if TYPE_CHECKING:
    from .adjustment import AdjustmentSet

__all__ = [
    "MAX_ORACLE_NODES",
    "DENOM",
    "OracleSizeError",
    "DiscreteScm",
    "discretize_for_oracle",
    "oracle_models",
    "binary_regimes",
    "ExactEif",
]

MAX_ORACLE_NODES = 20
DENOM = 1000


class OracleSizeError(ValueError):
    pass


def binary_regimes(p: int) -> list[tuple[int, ...]]:
    return [tuple(a) for a in product((0, 1), repeat=p + 1)]


@dataclass
class ExactEif:
    chi: Fraction
    b: list  # per time, object array over configurations
    pi: list
    ind: list  # I(A_0..A_k = a_0..a_k)
    treated: list  # I(A_k = a_k)
    psi: np.ndarray
    residual: np.ndarray
    increments: list


class DiscreteScm:
    """Binary structural model with rational CPTs over a :class:`Dag`.

    Parameters
    ----------
    dag : Dag
    numerators : dict
        ``numerators[v][c]`` is ``DENOM * P(v=1 | parent config c)``, where bit
        ``i`` of ``c`` is the value of the ``i``-th parent in topological
        order.
    """

    def __init__(self, dag: Dag, numerators: dict[str, Sequence[int]]):
        if len(dag) > MAX_ORACLE_NODES:
            raise OracleSizeError(f"exact enumeration limited to {MAX_ORACLE_NODES} binary nodes")
        self.dag = dag
        self.numerators = {v: tuple(int(m) for m in numerators[v]) for v in dag.names}
        for v in dag.names:
            npa = bin(dag.pa[dag.index[v]]).count("1")
            if len(self.numerators[v]) != 1 << npa:
                raise ValueError(f"{v}: expected {1 << npa} CPT entries")

    @property
    def cpts(self) -> dict[str, tuple[Fraction, ...]]:
        return {v: tuple(Fraction(m, DENOM) for m in ms) for v, ms in self.numerators.items()}

    # --- joint distribution ----------------------------------------------

    @cached_property
    def _parent_bits(self) -> list[list[int]]:
        return [list(_bits(self.dag.pa[i])) for i in range(len(self.dag))]

    def _factor(self, i: int, config: int) -> int:
        pbits = self._parent_bits[i]
        c = 0
        for pos, q in enumerate(pbits):
            c |= ((config >> q) & 1) << pos
        m = self.numerators[self.dag.names[i]][c]
        return m if (config >> i) & 1 else DENOM - m

    @cached_property
    def weights(self) -> np.ndarray:
        """Integer joint weights; probabilities are ``weights / DENOM**n``."""
        n = len(self.dag)
        w = np.empty(1 << n, dtype=object)
        for config in range(1 << n):
            acc = 1
            for i in range(n):
                acc *= self._factor(i, config)
            w[config] = acc
        return w

    @cached_property
    def total(self) -> int:
        return DENOM ** len(self.dag)

    @cached_property
    def configs(self) -> np.ndarray:
        return np.arange(1 << len(self.dag), dtype=np.int64)

    def column(self, v: str) -> np.ndarray:
        return (self.configs >> self.dag.index[v]) & 1

    # --- identification ----------------------------------------------------

    def _fixed_match(self, dag_names: Sequence[str], a: tuple[int, ...]) -> np.ndarray:
        """Rows where each listed treatment equals its regime value."""
        ok = np.ones(len(self.configs), dtype=bool)
        for v in dag_names:
            ok &= self.column(v) == a[self.dag.roles[v].k]
        return ok

    def _conditional(self, target: np.ndarray, cond_mask: int, rows: np.ndarray) -> np.ndarray:
        """``E[target | bits in cond_mask, rows]`` evaluated at every configuration."""
        num: dict[int, object] = {}
        den: dict[int, int] = {}
        keys = self.configs & cond_mask
        for i in np.flatnonzero(rows):
            key = int(keys[i])
            w = self.weights[i]
            num[key] = num.get(key, 0) + w * target[i]
            den[key] = den.get(key, 0) + w
        out = np.empty(len(keys), dtype=object)
        for i, key in enumerate(keys):
            key = int(key)
            out[i] = Fraction(num[key]) / den[key]
        return out

    def truth(self, a: Sequence[int]) -> Fraction:
        """``E[Y^a]`` by the truncated factorization."""
        a = tuple(a)
        dag = self.dag
        tmask = self._fixed_match(dag.treatments, a)
        total = 0
        for config in np.flatnonzero(tmask):
            config = int(config)
            acc = 1
            for i, v in enumerate(dag.names):
                if not dag.roles[v].is_treatment:
                    acc *= self._factor(i, config)
            if (config >> dag.index[dag.outcome]) & 1:
                total += acc
        return Fraction(total, DENOM ** (len(dag) - len(dag.treatments)))

    def _nuisances(self, z: "AdjustmentSet", a: tuple[int, ...]):
        dag = self.dag
        p = dag.p
        b: list = [None] * (p + 1)
        pi: list = [None] * (p + 1)
        target = self.column(dag.outcome).astype(object)
        for k in range(p, -1, -1):
            cov_mask = self.dag.mask(z.covariates(dag, k))
            held = self._fixed_match(sorted(z.held_fixed(dag, k)), a)
            treated = self.column(dag.treatments[k]) == a[k]
            b[k] = self._conditional(target, cov_mask, held & treated)
            pi[k] = self._conditional(treated.astype(object), cov_mask, held)
            target = b[k]
        return b, pi

    def nested_formula(self, z: "AdjustmentSet", a: Sequence[int]) -> Fraction:
        b, _ = self._nuisances(z, tuple(a))
        return _weighted_mean(self.weights, b[0], self.total)

    def identifies(self, z: "AdjustmentSet", regimes: Sequence[Sequence[int]] | None = None) -> bool:
        regimes = regimes if regimes is not None else binary_regimes(self.dag.p)
        return all(self.nested_formula(z, a) == self.truth(a) for a in regimes)

    # --- influence function ---------------------------------------------

    def _indicators(self, a: tuple[int, ...]):
        treated = [(self.column(t) == a[k]).astype(np.int64).astype(object) for k, t in enumerate(self.dag.treatments)]
        return treated, cumulative(treated)

    def eif(self, z: "AdjustmentSet", a: Sequence[int]) -> ExactEif:
        a = tuple(a)
        b, pi = self._nuisances(z, a)
        chi = _weighted_mean(self.weights, b[0], self.total)
        treated, ind = self._indicators(a)
        y = self.column(self.dag.outcome).astype(object)
        terms = assemble_psi(y, ind, b, pi, chi)
        return ExactEif(chi, b, pi, ind, treated, terms.psi, terms.residual, terms.increments)

    def efficient_eif(self, z: "AdjustmentSet", a: Sequence[int]) -> np.ndarray:
        """Nonparametric influence function of the nested functional itself.

        Each term is weighted by ``omega_k = nu_k(Z_k) / P(A_k = a_k, held_k, Z_k)``
        where ``nu_k`` is the law of ``Z_k`` pushed forward through the
        nested conditionals.  For full-history sets ``omega_k = 1/lam_k``
        and this coincides with :meth:`eif`.
        """
        a = tuple(a)
        dag = self.dag
        p = dag.p
        b, _ = self._nuisances(z, a)
        chi = _weighted_mean(self.weights, b[0], self.total)
        y = self.column(dag.outcome).astype(object)
        nxt = b[1:] + [y]
        masks = [self.dag.mask(z.covariates(dag, k)) for k in range(p + 1)]
        psi = b[0] - chi
        # nu_0 is the marginal law of Z_0
        nu: dict[int, Fraction] = {}
        for i, key in enumerate(self.configs & masks[0]):
            nu[int(key)] = nu.get(int(key), 0) + Fraction(self.weights[i], self.total)
        for k in range(p + 1):
            held = self._fixed_match(sorted(z.held_fixed(dag, k)), a)
            rows = held & (self.column(dag.treatments[k]) == a[k])
            keys = self.configs & masks[k]
            den: dict[int, int] = {}
            for i in np.flatnonzero(rows):
                den[int(keys[i])] = den.get(int(keys[i]), 0) + self.weights[i]
            omega = np.array(
                [nu.get(int(key), 0) * self.total / den[int(key)] if int(key) in den else 0 for key in keys],
                dtype=object,
            )
            psi = psi + omega * rows.astype(np.int64).astype(object) * (nxt[k] - b[k])
            if k < p:
                # push nu_k forward: nu_{k+1}(z') = sum_z nu_k(z) P(Z_{k+1}=z' | A_k=a_k, held_k, Z_k=z)
                joint: dict[tuple[int, int], int] = {}
                nkeys = self.configs & masks[k + 1]
                for i in np.flatnonzero(rows):
                    kk = (int(keys[i]), int(nkeys[i]))
                    joint[kk] = joint.get(kk, 0) + self.weights[i]
                new: dict[int, Fraction] = {}
                for (zk, zn), w in joint.items():
                    new[zn] = new.get(zn, 0) + nu.get(zk, 0) * Fraction(w, den[zk])
                nu = new
        return psi

    def mean(self, values) -> Fraction:
        return _weighted_mean(self.weights, values, self.total)

    def variance(self, values) -> Fraction:
        m = self.mean(values)
        return self.mean(values * values) - m * m

    def covariance(self, x, y) -> Fraction:
        return self.mean(x * y) - self.mean(x) * self.mean(y)

    def exact_variance(self, z: "AdjustmentSet", a: Sequence[int]) -> tuple[Fraction, Fraction]:
        """``(E[Y^a], Var psi)`` under the true nuisances."""
        e = self.eif(z, a)
        return e.chi, self.variance(e.psi)

    def population_ipw(self, z: "AdjustmentSet", a: Sequence[int]) -> Fraction:
        e = self.eif(z, a)
        lam = cumulative(e.pi)
        y = self.column(self.dag.outcome).astype(object)
        return self.mean(e.ind[-1] * y / lam[-1])

    def r_diagnostics(self, gb: "AdjustmentSet", b_set: "AdjustmentSet", a: Sequence[int]) -> dict:
        """Exact decomposition terms for the nested pair ``(G,B) ⊇ B``."""
        a = tuple(a)
        e_gb = self.eif(gb, a)
        e_b = self.eif(b_set, a)
        r = r_terms(e_b.ind, e_b.treated, e_b.pi, e_gb.b, e_b.b)
        p = self.dag.p
        return {
            "var_psi_b": self.variance(e_b.psi),
            "var_psi_gb": self.variance(e_gb.psi),
            "var_r": [self.variance(rk) for rk in r],
            "mean_r": [self.mean(rk) for rk in r],
            "cov_r": {(k, i): self.covariance(r[k], r[i]) for k in range(p + 1) for i in range(k + 1, p + 1)},
            "cov_psi_gb_r": [self.covariance(e_gb.psi, rk) for rk in r],
            "psi_b_minus_sum": self.mean((e_b.psi - e_gb.psi - _sum(r)) ** 2),
        }


def _sum(items):
    acc = 0
    for x in items:
        acc = acc + x
    return acc


def _weighted_mean(weights: np.ndarray, values, total: int) -> Fraction:
    acc = Fraction(0)
    for w, v in zip(weights, values):
        if v:
            acc += w * Fraction(v)
    return acc / total


def discretize_for_oracle(dag: Dag, seed: int, draw: int = 0) -> DiscreteScm:
    """Random binary model compatible with ``dag``.

    The CPT numerators for draw ``draw`` come from the numpy PCG64 stream
    seeded with ``SeedSequence([seed, draw])``, one ``integers(1, DENOM)`` call
    per node in topological order.
    """
    if len(dag) > MAX_ORACLE_NODES:
        raise OracleSizeError(f"exact enumeration limited to {MAX_ORACLE_NODES} binary nodes")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, draw])))
    nums = {}
    for i, v in enumerate(dag.names):
        npa = bin(dag.pa[i]).count("1")
        nums[v] = tuple(int(m) for m in rng.integers(1, DENOM, size=1 << npa))
    return DiscreteScm(dag, nums)


def oracle_models(dag: Dag, draws: int, seed: int = 0) -> list[DiscreteScm]:
    return [discretize_for_oracle(dag, seed, d) for d in range(draws)]
