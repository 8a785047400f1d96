import csv
import io
import json
from importlib import resources

import jsonschema
import pytest

from tdadjust.cli import main


def _schema(name):
    return json.loads((resources.files("tdadjust") / "schemas" / f"{name}.schema.json").read_text())


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list_sets_json(capsys):
    code, out, _ = _run(capsys, "list-sets", "--graph", "example1", "--format", "json")
    assert code == 0
    obj = json.loads(out)
    jsonschema.validate(obj, _schema("list_sets"))
    assert obj["count"] == 24 and obj["definition1_count"] == 9


def test_list_sets_table_and_csv(capsys):
    code, out, _ = _run(capsys, "list-sets", "--graph", "example2")
    assert code == 0 and len(out.splitlines()) == 28
    code, out, _ = _run(capsys, "list-sets", "--graph", "example2", "--format", "csv")
    assert out.splitlines()[0] == "set,Z0,Z1,def1"
    assert out.splitlines()[24] == "24,H,Q,no"


def test_dominance_json(capsys):
    code, out, _ = _run(capsys, "dominance", "--graph", "example2", "--format", "json")
    obj = json.loads(out)
    jsonschema.validate(obj, _schema("dominance"))
    assert obj["minima"] == [24]
    pairs = {(c["lower_number"], c["higher_number"]) for c in obj["certificates"]}
    assert {(24, 1), (24, 8)} <= pairs


def test_graph_file(tmp_path, capsys):
    path = tmp_path / "g.graph"
    path.write_text("node A0 role=treatment k=0\nnode Y role=outcome\nedge A0 -> Y\n")
    code, out, _ = _run(capsys, "list-sets", "--graph", str(path), "--format", "csv")
    assert code == 0 and len(out.splitlines()) == 2
    code, out, _ = _run(capsys, "dominance", "--graph", str(path), "--format", "json")
    assert json.loads(out)["minima"] == [1]


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--graph", "example1", "--builtin", "example1", "--reps", "3", "--n", "50"],
        ["reproduce", "table1"],
        ["oracle-check", "--graph", "example1"],
        ["list-sets"],
        ["frobnicate", "--graph", "example1"],
        ["reproduce", "table3", "--seed", "1"],
        ["simulate", "--graph", "example1", "--reps", "3", "--n", "50", "--seed", "1"],
        ["simulate", "--graph", "example2", "--builtin", "example1", "--reps", "3", "--n", "50", "--seed", "1"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 1
    assert "tdadjust" in err


def test_parse_error_exit(tmp_path, capsys):
    path = tmp_path / "bad.graph"
    path.write_text("node A0 role=treatment k=0\nedge A0 -> Y\n")
    code, _, err = _run(capsys, "list-sets", "--graph", str(path))
    assert code == 1 and "line 2" in err


def test_resource_limit_exit(tmp_path, capsys):
    lines = [f"node C0{j} role=covariate k=0 j={j}" for j in range(1, 20)]
    lines += ["node A0 role=treatment k=0", "node Y role=outcome", "edge A0 -> Y"]
    path = tmp_path / "big.graph"
    path.write_text("\n".join(lines) + "\n")
    code, _, err = _run(capsys, "oracle-check", "--graph", str(path), "--seed", "0")
    assert code == 3 and "resource limit" in err


def test_simulate_outputs(tmp_path, capsys):
    base = ["simulate", "--graph", "example2", "--builtin", "example2_strong_HA1", "--reps", "4", "--n", "150", "--seed", "5"]
    code, out, _ = _run(capsys, *base, "--format", "json")
    assert code == 0
    obj = json.loads(out)
    jsonschema.validate(obj, _schema("variance_report"))
    assert len(obj["rows"]) == 26
    target = tmp_path / "r.csv"
    assert main(base + ["--format", "csv", "--out", str(target), "--jobs", "2", "--estimator", "ipw"]) == 0
    rows = list(csv.DictReader(io.StringIO(target.read_text())))
    assert len(rows) == 26 and {r["estimator"] for r in rows} == {"ipw"}


def test_reproduce_smoke(capsys):
    with pytest.warns(UserWarning, match="smoke"):
        code, out, _ = _run(capsys, "reproduce", "table1", "--reps", "20", "--seed", "2", "--format", "json")
    obj = json.loads(out)
    jsonschema.validate(obj, _schema("reproduce"))
    assert obj["mode"] == "smoke"
    assert code == (0 if obj["passed"] else 2)


def test_oracle_check_exit_matches_report(capsys):
    code, out, _ = _run(capsys, "oracle-check", "--graph", "example2", "--seed", "0", "--draws", "3", "--format", "json")
    obj = json.loads(out)
    jsonschema.validate(obj, _schema("oracle_check"))
    assert obj["passed"]["identification"]
    assert code == (0 if all(obj["passed"].values()) else 2)
