"""Nuisance fitting, identification-formula estimators and Monte Carlo studies.

All numerical work is batched: arrays carry a leading replication axis of
length ``R`` so that many simulated datasets are fitted with one call to
``numpy.linalg.solve``.  Single-dataset functions wrap the batched core with
``R = 1``.

For a set ``Z`` and regime ``a`` the outcome regression at time ``k`` is a
linear model of the target on ``(A_k, held-fixed treatments, covariates of
Z_k)``; it is fitted on the observed columns and evaluated with ``A_k`` and
the held-fixed treatments replaced by their regime values.  Propensities
use a logistic model on ``(held-fixed treatments, covariates of Z_k)``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit

from .adjustment import AdjustmentSet
from .eif import assemble_psi, cumulative, r_terms
from .graph import Dag
from .scm import Dataset, ScmSpec, simulate_batch

log = logging.getLogger(__name__)

__all__ = [
    "EstimationError",
    "RankError",
    "SeparationError",
    "OracleUnavailable",
    "PositivityWarning",
    "ContrastSpec",
    "NuisanceSet",
    "EifEvaluation",
    "VarianceReport",
    "fit_linear",
    "fit_logistic",
    "fit_nuisances",
    "oracle_nuisances",
    "ipw_estimate",
    "gcomp_estimate",
    "onestep_estimate",
    "contrast_estimate",
    "eif_diagnostics",
    "exact_variance_oracle",
    "mc_study",
    "ESTIMATORS",
]

COND_LIMIT = 1e10
IRLS_TOL = 1e-8
IRLS_MAX_ITER = 100
PI_FLOOR = 1e-6
WEIGHT_CAP = 1e6
ESTIMATORS = ("ipw", "gcomp", "onestep")
DEFAULT_BATCH = 250


class EstimationError(RuntimeError):
    pass


class RankError(EstimationError):
    pass


class SeparationError(EstimationError):
    pass


class OracleUnavailable(EstimationError):
    """The requested nuisance has no closed form under the given model."""


class PositivityWarning(UserWarning):
    pass


# --- regression primitives -------------------------------------------------


def _with_intercept(x: np.ndarray) -> np.ndarray:
    ones = np.ones(x.shape[:-1] + (1,))
    return np.concatenate([ones, x], axis=-1)


def _as_batch(y, x):
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    single = y.ndim == 1
    if single:
        y = y[None]
        x = x[None]
    if x.ndim == 2:
        x = x[..., None]
    return y, x, single


def fit_linear(y, x, intercept: bool = True) -> np.ndarray:
    """Ordinary least squares; returns ``[intercept, slopes...]``.

    Accepts a single problem (``y`` of shape ``(n,)``, ``x`` of shape
    ``(n, d)``) or a batch (``(R, n)`` and ``(R, n, d)``).

    Raises
    ------
    RankError
        If the normal-equations matrix has condition number above ``1e10``.
    """
    y, x, single = _as_batch(y, x)
    if intercept:
        x = _with_intercept(x)
    n, d = x.shape[1], x.shape[2]
    if n <= d:
        raise RankError(f"need more rows ({n}) than columns ({d})")
    xtx = np.einsum("rni,rnj->rij", x, x)
    xty = np.einsum("rni,rn->ri", x, y)
    cond = np.linalg.cond(xtx)
    if not np.all(cond < COND_LIMIT):
        raise RankError(f"design is rank deficient (condition number {np.max(cond):.3g})")
    beta = np.linalg.solve(xtx, xty[..., None])[..., 0]
    return beta[0] if single else beta


def fit_logistic(y, x, intercept: bool = True, return_status: bool = False):
    """Logistic maximum likelihood by iteratively reweighted least squares.

    Converged when the largest coefficient change is below ``1e-8``.

    Raises
    ------
    SeparationError
        On a single-class outcome, (quasi-)separation or no convergence in
        100 iterations.  With ``return_status=True`` batched calls instead
        return ``(beta, ok)`` and flag failed replications.
    """
    y, x, single = _as_batch(y, x)
    if intercept:
        x = _with_intercept(x)
    r, n, d = x.shape
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise EstimationError("logistic outcome must be 0/1")
    frac = y.mean(axis=1)
    ok = (frac > 0) & (frac < 1)
    beta = np.zeros((r, d))
    beta[:, 0] = np.log(np.clip(frac, 1e-3, 1 - 1e-3) / (1 - np.clip(frac, 1e-3, 1 - 1e-3)))
    active = ok.copy()
    converged = np.zeros(r, dtype=bool)
    for _ in range(IRLS_MAX_ITER):
        if not active.any():
            break
        xa, ya, ba = x[active], y[active], beta[active]
        eta = np.einsum("rnd,rd->rn", xa, ba)
        mu = expit(eta)
        w = mu * (1 - mu)
        grad = np.einsum("rnd,rn->rd", xa, ya - mu)
        hess = np.einsum("rni,rn,rnj->rij", xa, w, xa)
        try:
            step = np.linalg.solve(hess, grad[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = np.full_like(ba, np.inf)
        finite = np.all(np.isfinite(step), axis=1)
        step[~finite] = 0.0
        new = ba + step
        delta = np.max(np.abs(step), axis=1)
        idx = np.flatnonzero(active)
        beta[idx] = new
        blown = (~finite) | (np.max(np.abs(new), axis=1) > 50)
        done = (delta < IRLS_TOL) & ~blown
        converged[idx[done]] = True
        ok[idx[blown]] = False
        active[idx[done | blown]] = False
    ok &= converged
    if return_status:
        return (beta[0], bool(ok[0])) if single else (beta, ok)
    if not ok.all():
        if np.any((frac == 0) | (frac == 1)):
            raise SeparationError("outcome has a single class")
        raise SeparationError("logistic fit did not converge (separation?)")
    return beta[0] if single else beta


# --- nuisance pipeline ------------------------------------------------------


@dataclass(frozen=True)
class ContrastSpec:
    """``sum_a c_a E[Y^a]`` over a finite list of regimes."""

    weights: tuple[tuple[tuple[int, ...], float], ...]

    @classmethod
    def of(cls, mapping: Mapping[tuple[int, ...], float] | Sequence[tuple[tuple[int, ...], float]]) -> "ContrastSpec":
        items = list(mapping.items()) if isinstance(mapping, Mapping) else list(mapping)
        regimes = [tuple(a) for a, _ in items]
        if len(set(regimes)) != len(regimes):
            raise ValueError("regimes must be distinct")
        if not any(c != 0 for _, c in items):
            raise ValueError("contrast needs a nonzero weight")
        return cls(tuple((tuple(a), float(c)) for a, c in items))

    @classmethod
    def single(cls, a: Sequence[int]) -> "ContrastSpec":
        return cls.of([(tuple(a), 1.0)])

    def __str__(self) -> str:
        return " ".join(f"{c:+g}*E[Y^{''.join(map(str, a))}]" for a, c in self.weights)


@dataclass
class NuisanceSet:
    """Fitted (or true) nuisances for one set and regime, batched over replications.

    ``b[k]`` and ``pi[k]`` are evaluated at every observation with the regime
    substituted into ``A_k`` and the held-fixed treatments.
    """

    z: AdjustmentSet
    regime: tuple[int, ...]
    b: list[np.ndarray]
    pi: list[np.ndarray]
    b_coef: list[np.ndarray] = field(default_factory=list)
    pi_coef: list[np.ndarray] = field(default_factory=list)
    ok: np.ndarray | None = None  # replications whose fits succeeded

    @property
    def lam(self) -> list[np.ndarray]:
        return cumulative(self.pi)

    @property
    def chi_plugin(self) -> np.ndarray:
        return self.b[0].mean(axis=-1)


def _columns(dag: Dag, z: AdjustmentSet, k: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    held = tuple(sorted(z.held_fixed(dag, k), key=dag.index.__getitem__))
    cov = tuple(sorted(z.covariates(dag, k), key=dag.index.__getitem__))
    return held, cov


def _stack(data: Mapping[str, np.ndarray], names: Sequence[str], subst: Mapping[str, float] | None = None):
    first = next(iter(data.values()))
    if not names:
        return np.zeros(first.shape + (0,))
    cols = []
    for v in names:
        if subst is not None and v in subst:
            cols.append(np.full(first.shape, float(subst[v])))
        else:
            cols.append(data[v])
    return np.stack(cols, axis=-1)


class _Fitter:
    """Fits nuisances on a batch of datasets, caching shared pieces.

    Propensity fits depend only on ``(k, Z_k)``; outcome fits depend on
    ``Z_k..Z_p`` and the regime.
    """

    def __init__(self, dag: Dag, data: Mapping[str, np.ndarray]):
        self.dag = dag
        self.data = {v: np.atleast_2d(np.asarray(x, dtype=float)) for v, x in data.items()}
        self.r = next(iter(self.data.values())).shape[0]
        self._pi: dict = {}
        self._b: dict = {}

    def _regime_subst(self, names, a):
        return {v: a[self.dag.roles[v].k] for v in names}

    def propensity(self, z: AdjustmentSet, k: int, a: tuple[int, ...]):
        held, cov = _columns(self.dag, z, k)
        key = (k, held, cov)
        if key not in self._pi:
            tname = self.dag.treatments[k]
            x = _stack(self.data, held + cov)
            beta, ok = fit_logistic(self.data[tname], x, return_status=True)
            self._pi[key] = (beta, ok)
        beta, ok = self._pi[key]
        xe = _with_intercept(_stack(self.data, held + cov, self._regime_subst(held, a)))
        p1 = expit(np.einsum("rnd,rd->rn", xe, beta))
        return (p1 if a[k] == 1 else 1 - p1), beta, ok

    def outcome(self, z: AdjustmentSet, k: int, a: tuple[int, ...]):
        dag = self.dag
        key = (tuple(z.parts[k:]), a)
        if key in self._b:
            return self._b[key]
        if k == dag.p:
            target = self.data[dag.outcome]
        else:
            target = self.outcome(z, k + 1, a)[0]
        held, cov = _columns(dag, z, k)
        names = (dag.treatments[k],) + held + cov
        beta = fit_linear(target, _stack(self.data, names))
        subst = self._regime_subst((dag.treatments[k],) + held, a)
        xe = _with_intercept(_stack(self.data, names, subst))
        pred = np.einsum("rnd,rd->rn", xe, beta)
        self._b[key] = (pred, beta)
        return self._b[key]

    def nuisances(self, z: AdjustmentSet, a: tuple[int, ...]) -> NuisanceSet:
        p = self.dag.p
        b, bc, pi, pc = [None] * (p + 1), [None] * (p + 1), [None] * (p + 1), [None] * (p + 1)
        ok = np.ones(self.r, dtype=bool)
        for k in range(p, -1, -1):
            b[k], bc[k] = self.outcome(z, k, a)
            pi[k], pc[k], okk = self.propensity(z, k, a)
            ok &= okk
        return NuisanceSet(z, a, b, pi, bc, pc, ok)


def _data_dict(data) -> dict[str, np.ndarray]:
    if isinstance(data, Dataset):
        return {v: data[v] for v in data.columns}
    return dict(data)


def fit_nuisances(dag: Dag, data, z: AdjustmentSet, regime: Sequence[int]) -> NuisanceSet:
    """Fit outcome and propensity models for ``z`` under ``regime``."""
    fitter = _Fitter(dag, _data_dict(data))
    nuis = fitter.nuisances(z, tuple(regime))
    if not nuis.ok.all():
        raise SeparationError("propensity model failed to converge")
    return nuis


# --- estimators ----------------------------------------------------------


def _indicators(dag: Dag, data: Mapping[str, np.ndarray], a: tuple[int, ...]):
    treated = [(np.atleast_2d(data[t]) == a[k]).astype(float) for k, t in enumerate(dag.treatments)]
    return treated, cumulative(treated)


def _check_positivity(pi: Sequence[np.ndarray], ind: Sequence[np.ndarray]) -> np.ndarray:
    """Flag replications where a contributing unit has ``pi < 1e-6``."""
    flagged = np.zeros(pi[0].shape[0], dtype=bool)
    for k, pk in enumerate(pi):
        contrib = ind[k - 1] if k > 0 else np.ones_like(pk)
        flagged |= np.any((pk < PI_FLOOR) & (contrib > 0), axis=-1)
    if flagged.any():
        warnings.warn(f"{int(flagged.sum())} replication(s) have propensities below {PI_FLOOR}", PositivityWarning)
    return flagged


def _ipw(dag, data, nuis: NuisanceSet):
    _, ind = _indicators(dag, data, nuis.regime)
    flagged = _check_positivity(nuis.pi, ind)
    weights = np.minimum(1.0 / nuis.lam[-1], WEIGHT_CAP)
    y = np.atleast_2d(data[dag.outcome])
    return (ind[-1] * weights * y).mean(axis=-1), flagged


@dataclass
class EifEvaluation:
    """Per-observation influence function values and their decomposition."""

    psi: np.ndarray
    residual: np.ndarray
    increments: list[np.ndarray]
    estimate: np.ndarray
    plugin: np.ndarray
    r: list[np.ndarray] | None = None
    s: list[np.ndarray] | None = None


def _onestep(dag, data, nuis: NuisanceSet) -> EifEvaluation:
    treated, ind = _indicators(dag, data, nuis.regime)
    _check_positivity(nuis.pi, ind)
    y = np.atleast_2d(data[dag.outcome])
    plugin = nuis.chi_plugin
    terms = assemble_psi(y, ind, nuis.b, nuis.pi, plugin[:, None])
    est = plugin + terms.psi.mean(axis=-1)
    shift = (est - plugin)[:, None]
    incs = list(terms.increments)
    incs[0] = incs[0] - shift
    return EifEvaluation(terms.psi - shift, terms.residual, incs, est, plugin)


def _squeeze(x):
    x = np.asarray(x)
    if x.ndim == 0:
        return float(x)
    return float(x[0]) if x.shape == (1,) else x


def ipw_estimate(dag: Dag, data, z: AdjustmentSet, regime: Sequence[int], nuis: NuisanceSet | None = None):
    """Inverse probability weighted mean of ``I(A = a) Y``.

    Weights are capped at ``1e6``; units with estimated propensity below
    ``1e-6`` raise a :class:`PositivityWarning`.
    """
    d = _data_dict(data)
    nuis = nuis if nuis is not None else fit_nuisances(dag, d, z, regime)
    est, _ = _ipw(dag, d, nuis)
    return _squeeze(est)


def gcomp_estimate(dag: Dag, data, z: AdjustmentSet, regime: Sequence[int], nuis: NuisanceSet | None = None):
    """Iterated conditional expectation (plug-in) estimate."""
    d = _data_dict(data)
    nuis = nuis if nuis is not None else fit_nuisances(dag, d, z, regime)
    return _squeeze(nuis.chi_plugin)


def onestep_estimate(dag: Dag, data, z: AdjustmentSet, regime: Sequence[int], nuis: NuisanceSet | None = None):
    """Plug-in estimate plus the sample mean of the influence function.

    Returns ``(estimate, EifEvaluation)``; the returned ``psi`` uses the
    final estimate as ``b_{-1}`` so its sample mean is zero.
    """
    d = _data_dict(data)
    nuis = nuis if nuis is not None else fit_nuisances(dag, d, z, regime)
    ev = _onestep(dag, d, nuis)
    if np.ndim(d[dag.outcome]) == 1:
        ev = EifEvaluation(
            ev.psi[0], ev.residual[0], [x[0] for x in ev.increments], ev.estimate[0], ev.plugin[0]
        )
    return _squeeze(ev.estimate), ev


def contrast_estimate(
    dag: Dag, data, sets: Mapping[tuple[int, ...], AdjustmentSet] | AdjustmentSet, contrast: ContrastSpec
):
    """``sum_a c_a chi_a`` with stacked influence function ``sum_a c_a psi_a``.

    Returns ``(estimate, psi, variance)`` with ``variance = var(psi) / n``.
    """
    d = _data_dict(data)
    est = 0.0
    psi = 0.0
    for a, c in contrast.weights:
        z = sets if isinstance(sets, AdjustmentSet) else sets[a]
        e, ev = onestep_estimate(dag, d, z, a)
        est = est + c * e
        psi = psi + c * ev.psi
    psi = np.asarray(psi) * np.ones_like(np.atleast_2d(d[dag.outcome]))
    n = psi.shape[-1]
    var = psi.var(axis=-1, ddof=1) / n
    return _squeeze(est), psi[0] if psi.shape[0] == 1 else psi, _squeeze(var)


# --- oracle nuisances for linear models --------------------------------------


def _lin_cond_exp(scm: ScmSpec, expr: dict, given: frozenset[str]) -> dict:
    """``E[expr | given]`` for a linear expression over node names.

    Every node outside ``given`` is replaced by its structural mean
    expression; valid when ``given`` holds no descendant of that node.
    """
    dag = scm.dag
    out: dict = {None: expr.get(None, 0.0)}
    stack = [(v, c) for v, c in expr.items() if v is not None]
    while stack:
        v, c = stack.pop()
        if v in given:
            out[v] = out.get(v, 0.0) + c
            continue
        if dag.mask(given) & dag.de[dag.index[v]]:
            raise OracleUnavailable(f"E[{v} | {sorted(given)}] conditions on a descendant")
        eq = scm[v]
        if eq.link != "identity":
            if eq.coef:
                raise OracleUnavailable(f"{v} is binary with parents outside the conditioning set")
            out[None] += c * float(expit(eq.intercept))
            continue
        out[None] += c * (eq.intercept + eq.noise.mean)
        stack.extend((u, c * w) for u, w in eq.coef.items())
    return out


def _eval_lin(expr: dict, data: Mapping[str, np.ndarray], subst: Mapping[str, float], shape) -> np.ndarray:
    val = np.full(shape, float(expr.get(None, 0.0)))
    for v, c in expr.items():
        if v is None or c == 0:
            continue
        val = val + c * (subst[v] if v in subst else data[v])
    return val


def oracle_nuisances(scm: ScmSpec, data, z: AdjustmentSet, regime: Sequence[int]) -> NuisanceSet:
    """True ``b`` and ``pi`` for linear built-in models, where available.

    ``b`` follows the structural recursion; ``pi_k`` is the structural
    treatment probability and therefore requires ``Z_k`` to contain every
    parent of ``A_k`` (and no descendant).  Raises :class:`OracleUnavailable`
    otherwise.
    """
    dag = scm.dag
    a = tuple(regime)
    d = {v: np.atleast_2d(np.asarray(x, dtype=float)) for v, x in _data_dict(data).items()}
    shape = d[dag.outcome].shape
    p = dag.p
    b: list = [None] * (p + 1)
    pi: list = [None] * (p + 1)
    expr: dict = {dag.outcome: 1.0}
    for k in range(p, -1, -1):
        held = z.held_fixed(dag, k)
        tk = dag.treatments[k]
        given = frozenset(z[k]) | {tk}
        cond = _lin_cond_exp(scm, expr, given)
        subst = {v: a[dag.roles[v].k] for v in held | {tk}}
        b[k] = _eval_lin(cond, d, subst, shape)
        # substitute the regime so the next step conditions a constant-shifted expression
        expr = {None: cond.get(None, 0.0)}
        for v, c in cond.items():
            if v is None:
                continue
            if v in subst:
                expr[None] += c * subst[v]
            else:
                expr[v] = expr.get(v, 0.0) + c
        eq = scm[tk]
        pa = dag.parents(tk)
        if not pa <= frozenset(z[k]):
            raise OracleUnavailable(f"Z_{k} lacks parents of {tk}")
        if dag.mask(z[k]) & dag.de[dag.index[tk]]:
            raise OracleUnavailable(f"Z_{k} contains descendants of {tk}")
        lin = _eval_lin({None: eq.intercept, **eq.coef}, d, {v: a[dag.roles[v].k] for v in held}, shape)
        p1 = expit(lin)
        pi[k] = p1 if a[k] == 1 else 1 - p1
    return NuisanceSet(z, a, b, pi, ok=np.ones(shape[0], dtype=bool))


# --- diagnostics -------------------------------------------------------------


def eif_diagnostics(
    dag: Dag,
    data,
    pair: tuple[AdjustmentSet, AdjustmentSet],
    regime: Sequence[int],
    nuisances: tuple[NuisanceSet, NuisanceSet] | None = None,
) -> dict:
    """Terms of the variance decomposition for a nested pair ``(G ∪ B, B)``.

    ``r_k = I_{k-1}/lam_{k-1}(B) * (I(A_k=a_k)/pi_k(B) - 1) * s_k`` with
    ``s_k = b_k(G,B) - b_k(B)``.  Reports the mean of each ``r_k`` and the
    covariances ``cov(r_k, r_i)`` and ``cov(psi_(G,B), r_k)``, each with a
    standard error, so that the zero-mean and zero-covariance identities can
    be checked.
    """
    gb, b = pair
    d = _data_dict(data)
    a = tuple(regime)
    if nuisances is None:
        nuis_gb = fit_nuisances(dag, d, gb, a)
        nuis_b = fit_nuisances(dag, d, b, a)
    else:
        nuis_gb, nuis_b = nuisances
    treated, ind = _indicators(dag, d, a)
    s = [x - y for x, y in zip(nuis_gb.b, nuis_b.b)]
    r = r_terms(ind, treated, nuis_b.pi, nuis_gb.b, nuis_b.b)
    y = np.atleast_2d(d[dag.outcome])
    chi = nuis_gb.chi_plugin[:, None]
    psi_gb = assemble_psi(y, ind, nuis_gb.b, nuis_gb.pi, chi).psi
    psi_b = assemble_psi(y, ind, nuis_b.b, nuis_b.pi, nuis_b.chi_plugin[:, None]).psi

    def mean_se(x):
        x = x.ravel()
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))

    def cov_se(x, w):
        x = x.ravel() - x.mean()
        w = w.ravel() - w.mean()
        return mean_se(x * w)

    p = dag.p
    return {
        "mean_r": [mean_se(rk) for rk in r],
        "cov_r": {(k, i): cov_se(r[k], r[i]) for k in range(p + 1) for i in range(k + 1, p + 1)},
        "cov_psi_gb_r": [cov_se(psi_gb, rk) for rk in r],
        "var_psi_b": float(psi_b.var()),
        "var_psi_gb": float(psi_gb.var()),
        "var_r": [float(rk.var()) for rk in r],
        "r": r,
        "s": s,
    }


def exact_variance_oracle(model, z: AdjustmentSet, regime: Sequence[int], kind: str = "paper") -> tuple[Fraction, Fraction]:
    """``(E[Y^a], Var psi)`` by exact enumeration of a binary model.

    ``kind="paper"`` uses the influence function built from ``pi_k(Z_k)``;
    ``kind="efficient"`` uses the nonparametric influence function of the
    nested functional (see :meth:`DiscreteScm.efficient_eif`).
    """
    if kind == "paper":
        return model.exact_variance(z, regime)
    if kind == "efficient":
        psi = model.efficient_eif(z, regime)
        return model.nested_formula(z, regime), model.variance(psi)
    raise ValueError(f"unknown kind {kind!r}")


# --- Monte Carlo ---------------------------------------------------------------


@dataclass
class VarianceReport:
    """Monte Carlo summary per adjustment set and estimator."""

    scm: str
    target: str
    seed: int
    reps: int
    n: int
    estimators: tuple[str, ...]
    labels: list[str]
    numbers: list[int]
    estimates: dict[str, np.ndarray]  # estimator -> (n_sets, reps); NaN marks failures
    flags: dict[str, np.ndarray] = field(default_factory=dict)

    def failures(self, estimator: str) -> np.ndarray:
        return np.isnan(self.estimates[estimator]).sum(axis=1)

    def mean(self, estimator: str) -> np.ndarray:
        return np.nanmean(self.estimates[estimator], axis=1)

    def sd(self, estimator: str) -> np.ndarray:
        return np.nanstd(self.estimates[estimator], axis=1, ddof=1)

    def se_sd(self, estimator: str) -> np.ndarray:
        ok = self.reps - self.failures(estimator)
        return self.sd(estimator) / np.sqrt(2.0 * (ok - 1))

    def rows(self) -> list[dict]:
        out = []
        for est in self.estimators:
            mean, sd, se, fail = self.mean(est), self.sd(est), self.se_sd(est), self.failures(est)
            for i, (num, lab) in enumerate(zip(self.numbers, self.labels)):
                out.append(
                    {
                        "set": num,
                        "label": lab,
                        "estimator": est,
                        "reps": self.reps,
                        "failures": int(fail[i]),
                        "mean": float(mean[i]),
                        "sd": float(sd[i]),
                        "se_sd": float(se[i]),
                    }
                )
        return out

    CSV_COLUMNS = ("set", "label", "estimator", "reps", "failures", "mean", "sd", "se_sd")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "scm": self.scm,
            "target": self.target,
            "seed": self.seed,
            "reps": self.reps,
            "n": self.n,
            "estimators": list(self.estimators),
            "rows": [{k: (round(v, 12) if isinstance(v, float) else v) for k, v in row.items()} for row in self.rows()],
        }


def _run_batch(args):
    scm, sets, contrast, estimators, n, seed, reps = args
    data = simulate_batch(scm, n, seed, reps)
    dag = scm.dag
    fitter = _Fitter(dag, data)
    out = {e: np.full((len(sets), len(reps)), np.nan) for e in estimators}
    for i, z in enumerate(sets):
        acc = {e: np.zeros(len(reps)) for e in estimators}
        ok = np.ones(len(reps), dtype=bool)
        for a, c in contrast.weights:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", PositivityWarning)
                    nuis = fitter.nuisances(z, a)
                    ok &= nuis.ok
                    if "gcomp" in acc:
                        acc["gcomp"] += c * nuis.chi_plugin
                    if "ipw" in acc:
                        acc["ipw"] += c * _ipw(dag, data, nuis)[0]
                    if "onestep" in acc:
                        acc["onestep"] += c * _onestep(dag, data, nuis).estimate
            except EstimationError as exc:
                log.debug("batch failure for set %d: %s", i, exc)
                ok[:] = False
        for e in estimators:
            out[e][i] = np.where(ok, acc[e], np.nan)
    return out


def mc_study(
    scm: ScmSpec,
    sets: Sequence[AdjustmentSet],
    target: ContrastSpec | Sequence[int],
    reps: int,
    n: int,
    seed: int,
    estimators: Sequence[str] = ("onestep",),
    jobs: int = 1,
    batch_size: int = DEFAULT_BATCH,
    numbers: Sequence[int] | None = None,
) -> VarianceReport:
    """Simulate ``reps`` datasets and estimate the target with every set.

    Replication ``r`` uses the substreams keyed by ``(seed, r)``; batches
    have a fixed layout, so results do not depend on ``jobs``.  Failed
    replications are recorded as NaN and counted.
    """
    if reps < 2:
        raise ValueError("reps must be at least 2")
    for e in estimators:
        if e not in ESTIMATORS:
            raise ValueError(f"unknown estimator {e!r}")
    contrast = target if isinstance(target, ContrastSpec) else ContrastSpec.single(target)
    sets = list(sets)
    chunks = [list(range(s, min(s + batch_size, reps))) for s in range(0, reps, batch_size)]
    tasks = [(scm, sets, contrast, tuple(estimators), n, seed, c) for c in chunks]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            results = list(pool.map(_run_batch, tasks))
    else:
        results = [_run_batch(t) for t in tasks]
    estimates = {e: np.concatenate([res[e] for res in results], axis=1) for e in estimators}
    dag = scm.dag
    return VarianceReport(
        scm=scm.name,
        target=str(contrast),
        seed=seed,
        reps=reps,
        n=n,
        estimators=tuple(estimators),
        labels=[z.label(dag) for z in sets],
        numbers=list(numbers) if numbers is not None else list(range(1, len(sets) + 1)),
        estimates=estimates,
    )
