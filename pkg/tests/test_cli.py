import csv
import json

import pytest

from leray import scenario as sc
from leray.cli import EXIT_FAIL, EXIT_INVALID, EXIT_PASS, main


def run(tmp_path, *args):
    out = tmp_path / "report.json"
    code = main(list(args) + ["--out", str(out)])
    return code, json.loads(out.read_text()), out


def test_verify_on_passes(tmp_path):
    code, rep, out = run(tmp_path, "verify-system", "--scenario", "verify_on")
    assert code == EXIT_PASS and rep["pass"]
    assert rep["scenario_digest"] == sc.digest(sc.builtin("verify_on"))
    assert set(rep["tolerances"]) == {c["name"] for c in rep["checks"]}
    rows = list(csv.reader(open(tmp_path / "report.csv")))
    assert rows[0][0] == "name" and len(rows) == len(rep["checks"]) + 1


def test_verify_off_fails(tmp_path):
    code, rep, _ = run(tmp_path, "verify-system", "--scenario", "verify_off")
    assert code == EXIT_FAIL and not rep["pass"]


def test_missing_scenario_is_invalid(tmp_path):
    code, rep, _ = run(tmp_path, "invert", "--scenario", "no_such_scenario")
    assert code == EXIT_INVALID
    assert rep["error"]["type"] == "ScenarioError"


def test_bad_schema_version(tmp_path):
    doc = sc.builtin("verify_on")
    doc["schema_version"] = 99
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    code, rep, _ = run(tmp_path, "verify-system", "--scenario", str(path))
    assert code == EXIT_INVALID


def test_invalid_datum_is_reported(tmp_path):
    doc = sc.builtin("interp_linear")
    doc.update(command="invert", g=[{"coeff": 1, "base": [0.2, 0.3]}])
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    code, rep, _ = run(tmp_path, "invert", "--scenario", str(path))
    assert code == EXIT_INVALID
    assert rep["error"]["type"] == "ScenarioInvalid"


def test_martineau_command(tmp_path):
    code, rep, _ = run(tmp_path, "martineau", "--scenario", "martineau_n2")
    assert code == EXIT_PASS
    assert all(c["pass"] for c in rep["checks"])


def test_list(capsys):
    assert main(["list"]) == EXIT_PASS
    assert "circle" in capsys.readouterr().out.split()


def test_scenario_parsing():
    assert sc.parse_complex([1, 2]) == 1 + 2j
    assert sc.parse_complex("0.5-2i") == 0.5 - 2j
    with pytest.raises(sc.ScenarioError):
        sc.parse_complex([1, 2, 3])
    e = sc.parse_function({"exp": "z1", "terms": 3}, 1)
    assert len(e.terms) == 3
    with pytest.raises(sc.ScenarioError):
        sc.parse_function(3, 1)
    doc = sc.builtin("circle")
    assert sc.digest(doc) == sc.digest(json.loads(json.dumps(doc)))
