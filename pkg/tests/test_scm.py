import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import truncnorm

from tdadjust.scm import (
    BUILTINS,
    STANDARD_TN,
    Equation,
    NoiseLaw,
    ScmError,
    ScmSpec,
    builtin_scm,
    sample_truncnorm,
    simulate_batch,
    simulate_dataset,
)


def test_truncated_normal_moments():
    assert STANDARD_TN.mean == pytest.approx(0.0, abs=1e-12)
    assert truncnorm.var(-2, 2) == pytest.approx(0.7737, abs=1e-4)
    x = sample_truncnorm(STANDARD_TN, np.random.default_rng(0), 200_000)
    assert x.min() >= -2 and x.max() <= 2
    assert x.mean() == pytest.approx(0.0, abs=0.01)
    assert x.var() == pytest.approx(0.7737, abs=0.01)


def test_shifted_truncated_normal_mean():
    law = NoiseLaw(1.0, 4.0, 0.0, math.inf)
    assert law.mean == pytest.approx(truncnorm.mean(-0.5, math.inf, loc=1, scale=2))


def test_noise_validation():
    with pytest.raises(ScmError):
        NoiseLaw(0, 0)
    with pytest.raises(ScmError):
        NoiseLaw(0, 1, 2, 1)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_load_and_roundtrip(name):
    scm = builtin_scm(name)
    again = ScmSpec.from_json(scm.dag, json.loads(json.dumps(scm.to_json())))
    assert again.to_json() == scm.to_json()


def test_unknown_builtin():
    with pytest.raises(ScmError):
        builtin_scm("example3")


def test_spec_validation(ex1):
    eqs = list(builtin_scm("example1").equations)
    with pytest.raises(ScmError):
        ScmSpec(ex1, eqs[:-1])
    bad = [e if e.node != "A0" else Equation("A0", noise=STANDARD_TN) for e in eqs]
    with pytest.raises(ScmError, match="expit"):
        ScmSpec(ex1, bad)
    bad = [e if e.node != "Y" else Equation("Y", coef={"C01": 1.0}, noise=STANDARD_TN) for e in eqs]
    with pytest.raises(ScmError, match="non-parents"):
        ScmSpec(ex1, bad)


def test_determinism_and_batch_layout():
    scm = builtin_scm("example2_strong_HA1")
    a = simulate_dataset(scm, 50, seed=4, replication=7)
    b = simulate_dataset(scm, 50, seed=4, replication=7)
    batch = simulate_batch(scm, 50, seed=4, replications=[6, 7])
    for v in a.columns:
        np.testing.assert_array_equal(a[v], b[v])
        np.testing.assert_array_equal(batch[v][1], a[v])
    assert set(np.unique(a["A0"])) <= {0.0, 1.0}


@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_any_seed_gives_valid_data(seed, n):
    ds = simulate_dataset(builtin_scm("example1"), n, seed)
    assert ds.n == n
    assert np.all(np.isfinite(np.column_stack([ds[v] for v in ds.columns])))


def test_csv(ex2):
    ds = simulate_dataset(builtin_scm("example2_strong_HRQ"), 3, seed=1)
    lines = ds.to_csv().splitlines()
    assert lines[0] == ",".join(ex2.names)
    assert len(lines) == 4
