import csv
import hashlib
import json
import math
import subprocess
import sys

import pytest

from semiflow_escape.cli import FLOW_COLUMNS, dumps, fmt, main

BASE = {
    "alphabet_size": 2,
    "matrix": [[1, 1], [1, 1]],
    "functions": [
        {"name": "half", "depth": 1, "values": {"1": math.log(0.5), "2": math.log(0.5)}},
        {"name": "roof", "depth": 1, "values": {"1": 1.5, "2": 2.0}},
    ],
    "potential": "half",
    "roof": "roof",
    "discretization": {"delta": 0.1, "m": 4},
    "target": {"periodic": "1"},
    "holes": {"n_min": 3, "n_max": 6},
    "monte_carlo": {"samples": 4000, "seed": 7, "t": 6.0},
}


def write(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def run(tmp_path, command, doc, *extra, out="out"):
    cfg = write(tmp_path, doc)
    return main([command, "--config", str(cfg), "--out", str(tmp_path / out), *extra])


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_pressure_zero_potential(tmp_path):
    doc = {k: v for k, v in BASE.items() if k != "potential"}
    assert run(tmp_path, "pressure", doc) == 0
    out = json.loads((tmp_path / "out" / "pressure.json").read_text())
    assert out["pressure"] == pytest.approx(math.log(2), abs=1e-15)


def test_theorem_a_columns(tmp_path):
    assert run(tmp_path, "theorem-a", BASE) == 0
    rows = read_csv(tmp_path / "out" / "theorem_a.csv")
    assert list(rows[0])[: len(FLOW_COLUMNS)] == FLOW_COLUMNS
    assert [int(r["n"]) for r in rows] == [3, 4, 5, 6]
    for r in rows:
        assert float(r["ratio_lo"]) <= float(r["ratio_hi"])
        assert float(r["gamma"]) == 0.5
        assert 0 < float(r["mc_estimate"]) <= 1


def test_missing_matrix(tmp_path, capsys):
    doc = {k: v for k, v in BASE.items() if k != "matrix"}
    assert run(tmp_path, "pressure", doc) == 2
    assert "matrix" in capsys.readouterr().err


def test_missing_section_named(tmp_path, capsys):
    doc = {k: v for k, v in BASE.items() if k != "holes"}
    assert run(tmp_path, "escape-discrete", doc) == 2
    assert "holes" in capsys.readouterr().err


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["pressure", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_numerical_failure(tmp_path, capsys):
    doc = dict(BASE, matrix=[[1, 1], [1, 0]], potential=None, functions=[])
    doc["holes"] = {"list": [{"depth": 1, "words": ["1"]}]}
    assert run(tmp_path, "escape-discrete", doc) == 3
    assert "numerical" in capsys.readouterr().err


def test_infeasible_discretization(tmp_path):
    doc = dict(BASE, discretization={"delta": 0.9, "m": 2})
    assert run(tmp_path, "escape-flow", doc) == 2


def test_auto_discretization(tmp_path):
    doc = dict(BASE, discretization={"delta": "auto", "m": "auto"})
    assert run(tmp_path, "escape-flow", doc) == 0
    rows = read_csv(tmp_path / "out" / "escape_flow.csv")
    assert float(rows[0]["delta"]) <= 0.1


def test_determinism_and_manifest(tmp_path):
    assert run(tmp_path, "theorem-a", BASE, "--jobs", "3", out="a") == 0
    assert run(tmp_path, "theorem-a", BASE, out="b") == 0
    for name in ("theorem_a.csv", "discrete_ratio.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    digest = hashlib.sha256((tmp_path / "config.json").read_bytes()).hexdigest()
    assert manifest["config_sha256"] == digest
    assert {a["path"] for a in manifest["artifacts"]} == {"theorem_a.csv", "discrete_ratio.csv"}
    assert all(r["config_sha256"] == digest for r in read_csv(tmp_path / "a" / "theorem_a.csv"))
    assert "numpy" in manifest["versions"] and manifest["timings"]["total_seconds"] > 0


@pytest.mark.parametrize("command,artifact", [
    ("gibbs-certify", "gibbs_certificate.json"),
    ("escape-discrete", "escape_discrete.csv"),
    ("validate-nested", "validate_nested.json"),
    ("build-suspension", "suspension.json"),
    ("verify-invariance", "invariance.json"),
    ("escape-flow", "escape_flow.csv"),
    ("monte-carlo", "monte_carlo.csv"),
])
def test_every_command(tmp_path, command, artifact):
    doc = dict(BASE, discretization={"delta": 0.25, "m": 1}, suspension={"L": 4})
    assert run(tmp_path, command, doc) == 0
    assert (tmp_path / "out" / artifact).exists()


def test_monte_carlo_agrees(tmp_path):
    doc = dict(BASE, monte_carlo={"samples": 20000, "seed": 3, "t": 6.0})
    assert run(tmp_path, "monte-carlo", doc) == 0
    for r in read_csv(tmp_path / "out" / "monte_carlo.csv"):
        assert abs(float(r["z_score"])) < 4


def test_suspension_json_shape(tmp_path):
    doc = dict(BASE, discretization={"delta": 0.25, "m": 1})
    assert run(tmp_path, "build-suspension", doc) == 0
    out = json.loads((tmp_path / "out" / "suspension.json").read_text())
    assert len(out["states"]) == len(out["state_measure"]) == 8 + 10
    assert out["states"][0] == ["1", 0]
    assert sum(out["state_measure"]) == pytest.approx(1.0)


def test_formatting():
    assert fmt(0.1) == "0.10000000000000001"
    assert float(fmt(1 / 3)) == 1 / 3
    assert fmt(None) == "" and fmt(3) == "3"
    assert json.loads(dumps({"a": [1.5, float("inf")], "b": {"c": None}})) == {"a": [1.5, None], "b": {"c": None}}


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, {k: v for k, v in BASE.items() if k != "potential"})
    proc = subprocess.run([sys.executable, "-m", "semiflow_escape", "pressure", "--config", str(cfg),
                           "--out", str(tmp_path / "m")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
