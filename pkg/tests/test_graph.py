import pytest
from hypothesis import given

from tdadjust.graph import GraphParseError, GraphValidationError, parse_dag

from strategies import longitudinal_dags


def test_example1_structure(ex1):
    assert ex1.p == 1
    assert ex1.treatments == ("A0", "A1")
    assert ex1.outcome == "Y"
    assert ex1.n_ck == (2, 2)
    assert len(ex1.edges) == 11
    assert ex1.parents("A1") == {"C02", "A0", "C11"}
    assert ex1.parents("Y") == {"A0", "C12", "A1"}


def test_example2_structure(ex2):
    assert ex2.p == 1
    assert len(ex2.edges) == 6
    assert ex2.parents("R") == {"A0", "H"}
    assert ex2.roles["H"].k == 1 and ex2.roles["R"].k == 1


def test_topological_order_is_stable(ex1):
    assert ex1.names == ("C01", "C02", "A0", "C11", "C12", "A1", "Y")


def test_cycle_rejected():
    text = """
    node X role=covariate k=0 j=1
    node A0 role=treatment k=0
    node Y role=outcome
    edge X -> A0
    edge A0 -> X
    edge A0 -> Y
    """
    with pytest.raises(GraphValidationError):
        parse_dag(text)


def test_outcome_must_be_terminal():
    text = """
    node A0 role=treatment k=0
    node X role=covariate k=1 j=1
    node Y role=outcome
    edge A0 -> Y
    edge Y -> X
    """
    with pytest.raises(GraphValidationError):
        parse_dag(text)


def test_unknown_node_in_edge_reports_line():
    text = "node A0 role=treatment k=0\nnode Y role=outcome\nedge A0 -> Z\n"
    with pytest.raises(GraphParseError) as info:
        parse_dag(text)
    assert info.value.line == 3


def test_bad_role_reports_line():
    with pytest.raises(GraphParseError) as info:
        parse_dag("node A0 role=exposure k=0\n")
    assert info.value.line == 1


@given(longitudinal_dags())
def test_serialize_roundtrip(dag):
    again = parse_dag(dag.serialize())
    assert again == dag
    assert again.names == dag.names


@given(longitudinal_dags())
def test_topological_order_respects_edges(dag):
    pos = {v: i for i, v in enumerate(dag.names)}
    for u, v in dag.edges:
        assert pos[u] < pos[v]
