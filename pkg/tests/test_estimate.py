import numpy as np
import pytest

from tdadjust import AdjustmentSet, parse_dag
from tdadjust.estimate import (
    ContrastSpec,
    NuisanceSet,
    OracleUnavailable,
    RankError,
    SeparationError,
    VarianceReport,
    contrast_estimate,
    eif_diagnostics,
    fit_linear,
    fit_logistic,
    fit_nuisances,
    gcomp_estimate,
    ipw_estimate,
    mc_study,
    onestep_estimate,
    oracle_nuisances,
)
from tdadjust.scm import builtin_scm, simulate_dataset

from conftest import by_number

rng = np.random.default_rng(12345)


def test_linear_exact():
    x = rng.normal(size=50)
    beta = fit_linear(2 * x, x[:, None])
    np.testing.assert_allclose(beta, [0.0, 2.0], atol=1e-10)


def test_linear_batched_matches_single():
    x = rng.normal(size=(3, 40, 2))
    y = x @ np.array([1.0, -1.0]) + rng.normal(size=(3, 40))
    batch = fit_linear(y, x)
    for r in range(3):
        np.testing.assert_allclose(batch[r], fit_linear(y[r], x[r]), atol=1e-12)


def test_linear_rank_error():
    x = rng.normal(size=30)
    with pytest.raises(RankError):
        fit_linear(x, np.column_stack([x, x]))


def test_logistic_null_and_errors():
    x = rng.normal(size=(4000, 1))
    y = (np.arange(4000) % 2).astype(float)
    beta = fit_logistic(y, x)
    np.testing.assert_allclose(beta, [0.0, 0.0], atol=0.1)
    with pytest.raises(SeparationError):
        fit_logistic((x[:, 0] > 0).astype(float), x)
    with pytest.raises(SeparationError):
        fit_logistic(np.ones(100), x[:100])


def test_logistic_recovers_slope():
    x = rng.normal(size=(20000, 1))
    y = (rng.random(20000) < 1 / (1 + np.exp(-(0.5 + 2 * x[:, 0])))).astype(float)
    np.testing.assert_allclose(fit_logistic(y, x), [0.5, 2.0], atol=0.1)


SIMPLE = "node A0 role=treatment k=0\nnode Y role=outcome\nedge A0 -> Y\n"


def test_ipw_known_weights():
    dag = parse_dag(SIMPLE)
    a = (rng.random(500) < 0.5).astype(float)
    y = a + rng.normal(size=500)
    data = {"A0": a, "Y": y}
    z = AdjustmentSet.of(None)
    half = np.full((1, 500), 0.5)
    nuis = NuisanceSet(z, (1,), [np.zeros((1, 500))], [half])
    assert ipw_estimate(dag, data, z, (1,), nuis) == pytest.approx(2 * np.mean(a * y), abs=1e-12)


@pytest.fixture(scope="module")
def data1():
    return simulate_dataset(builtin_scm("example1"), 5000, seed=9)


def test_onestep_centering(ex1, sets1, data1):
    for n in (1, 14, 24):
        est, ev = onestep_estimate(ex1, data1, by_number(sets1, n), (1, 1))
        assert abs(ev.psi.mean()) < 1e-10
        assert est == pytest.approx(3.0, abs=0.2)


def test_estimators_agree_roughly(ex1, sets1, data1):
    z = by_number(sets1, 5)
    g = gcomp_estimate(ex1, data1, z, (1, 1))
    i = ipw_estimate(ex1, data1, z, (1, 1))
    o, _ = onestep_estimate(ex1, data1, z, (1, 1))
    assert abs(g - o) < 0.1 and abs(i - o) < 0.3


def test_held_fixed_columns_use_regime(ex1, sets1, data1):
    nuis = fit_nuisances(ex1, data1, by_number(sets1, 14), (1, 0))
    # b_1 is evaluated at A1=0 and A0=1 for everyone: it then depends on C12 only
    c12 = data1["C12"]
    slope = np.polyfit(c12, nuis.b[1][0], 1)
    assert np.allclose(nuis.b[1][0], np.polyval(slope, c12))


def test_contrasts(ex1, sets1, data1):
    z = by_number(sets1, 14)
    est, psi, _ = contrast_estimate(ex1, data1, z, ContrastSpec.single((1, 1)))
    single, ev = onestep_estimate(ex1, data1, z, (1, 1))
    assert est == pytest.approx(single)
    np.testing.assert_allclose(psi, ev.psi)
    with pytest.raises(ValueError):
        ContrastSpec.of([((1, 1), 1.0), ((1, 1), -1.0)])
    diff, psi, var = contrast_estimate(ex1, data1, z, ContrastSpec.of({(1, 1): 1.0, (0, 0): -1.0}))
    assert diff == pytest.approx(3.0, abs=0.3)  # E[Y^00] = 0
    assert var > 0


def test_identical_regimes_cancel(ex1, sets1, data1):
    z = by_number(sets1, 14)
    spec = ContrastSpec((((1, 1), 1.0), ((1, 1), -1.0)))  # bypasses the distinctness check
    est, psi, _ = contrast_estimate(ex1, data1, z, spec)
    assert est == 0.0
    assert np.all(psi == 0)


def test_mc_two_reps(ex2, sets2):
    scm = builtin_scm("example2_strong_HA1")
    rep = mc_study(scm, [by_number(sets2, 24)], (1, 1), reps=2, n=300, seed=1)
    e = rep.estimates["onestep"][0]
    assert rep.sd("onestep")[0] == pytest.approx(abs(e[0] - e[1]) / np.sqrt(2))
    with pytest.raises(ValueError):
        mc_study(scm, [by_number(sets2, 24)], (1, 1), reps=1, n=300, seed=1)


def test_mc_independent_of_jobs_and_batches(ex2, sets2):
    scm = builtin_scm("example2_strong_HRQ")
    sets = [by_number(sets2, n) for n in (1, 8, 24)]
    a = mc_study(scm, sets, (1, 1), reps=6, n=200, seed=3, estimators=("ipw", "onestep"), batch_size=2)
    b = mc_study(scm, sets, (1, 1), reps=6, n=200, seed=3, estimators=("ipw", "onestep"), jobs=2, batch_size=2)
    assert a.to_csv() == b.to_csv()
    np.testing.assert_array_equal(a.estimates["onestep"], b.estimates["onestep"])


def test_report_formats(ex2, sets2):
    rep = mc_study(builtin_scm("example2_strong_HA1"), [by_number(sets2, 1)], (1, 1), reps=3, n=200, seed=0)
    assert rep.to_csv().splitlines()[0] == ",".join(VarianceReport.CSV_COLUMNS)
    assert rep.to_json()["rows"][0]["failures"] == 0


def test_oracle_nuisances(ex2, sets2):
    scm = builtin_scm("example2_strong_HA1")
    data = simulate_dataset(scm, 100, seed=0)
    nuis = oracle_nuisances(scm, data, by_number(sets2, 8), (1, 1))
    # b_0(H) = a1 + a0 + 2.5 H
    np.testing.assert_allclose(nuis.b[0][0], 2 + 2.5 * data["H"])
    with pytest.raises(OracleUnavailable):
        oracle_nuisances(scm, data, by_number(sets2, 24), (1, 1))  # Z_1 lacks H


def test_diagnostics_with_oracle_nuisances(ex2, sets2):
    scm = builtin_scm("example2_strong_HA1")
    data = simulate_dataset(scm, 100_000, seed=21)
    gb, b = by_number(sets2, 8), by_number(sets2, 5)
    nuis = (oracle_nuisances(scm, data, gb, (1, 1)), oracle_nuisances(scm, data, b, (1, 1)))
    diag = eif_diagnostics(ex2, data, (gb, b), (1, 1), nuisances=nuis)
    for m, se in diag["mean_r"] + list(diag["cov_r"].values()) + diag["cov_psi_gb_r"]:
        assert abs(m) < 4 * se + 1e-12
