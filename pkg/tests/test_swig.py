import pytest

from tdadjust import AdjustmentSet, Regime, build_swig, sequential_exchangeability_holds
from tdadjust.dsep import d_separated


def test_split_nodes(ex1):
    sw = build_swig(ex1)
    assert sw.fixed == {"A0": "a0", "A1": "a1"}
    assert len(sw) == len(ex1) + 2
    assert len(sw.edges) == len(ex1.edges)
    assert sw.parents("a0") == frozenset()
    assert sw.children("A0") == frozenset()
    assert sw.parents("C11") == {"a0", "C02"}


def test_counterfactual_labels(ex1):
    sw = build_swig(ex1)
    assert sw.labels["Y"] == "Y^{a0,a1}"
    assert sw.labels["C12"] == "C12^{a0}"
    assert sw.labels["C02"] == "C02"
    assert sw.relabeled == {"C11", "C12", "A1", "Y"}


def test_independencies_read_from_swig(ex1):
    sw = build_swig(ex1)
    assert d_separated(sw, {"Y"}, {"A0"}, {"C02", "a0", "a1"})
    assert d_separated(sw, {"Y"}, {"A1"}, {"C12", "C02", "A0", "a0", "a1"})


def test_exchangeability(ex1):
    sw = build_swig(ex1)
    assert sequential_exchangeability_holds(sw, AdjustmentSet.of("C02", "C12"))
    assert sequential_exchangeability_holds(sw, AdjustmentSet.of("C01", "C11"))
    assert not sequential_exchangeability_holds(sw, AdjustmentSet.of(None, "C12"))
    assert not sequential_exchangeability_holds(sw, AdjustmentSet.of("C02", None))


def test_exchangeability_rejects_future_treatment(ex1):
    with pytest.raises(ValueError):
        sequential_exchangeability_holds(build_swig(ex1), AdjustmentSet.of("A0", None))


def test_regime(ex1):
    r = Regime.of(1, 0)
    assert str(r) == "10" and len(r) == 2
    r.validate(ex1)
    with pytest.raises(ValueError):
        Regime.of(1, 1, 0).validate(ex1)
    with pytest.raises(ValueError):
        Regime.of(1, 2).validate(ex1)
