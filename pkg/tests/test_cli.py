import csv
import json
import os
import subprocess
import sys

import pytest

from stefanlie import __version__
from stefanlie.cli import main

from conftest import fixture_path


def run_cli(*args):
    return main([str(a) for a in args])


def test_classify_exp_exp(tmp_path, capsys):
    assert run_cli("classify", fixture_path("exp_exp.json"), "--out", tmp_path) == 0
    assert "Table 1 case 3, dim 4" in capsys.readouterr().out
    data = json.loads((tmp_path / "classify.json").read_text())
    assert data["classify"]["table_case"] == 3 and data["classify"]["dimension"] == 4


def test_check_inverse_sqrt_admits_x2(tmp_path, capsys):
    assert run_cli("check", fixture_path("ss_sqrt_t.json"), "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "admitted: ['X2']" in out
    data = json.loads((tmp_path / "check.json").read_text())
    assert any(r["item"] == "d" for r in data["conditions"])


def test_reduce_emits_description(tmp_path, capsys):
    assert run_cli("reduce", fixture_path("tw_constant.json"), "--out", tmp_path) == 0
    assert "TravelingWave reduction in xi" in capsys.readouterr().out
    data = json.loads((tmp_path / "reduce.json").read_text())
    assert data["reduce"][0]["parameters"] == ["delta", "mu"]


def test_solve_writes_profiles(tmp_path):
    assert run_cli("solve", fixture_path("tw_constant.json"), "--out", tmp_path) == 0
    data = json.loads((tmp_path / "solve.json").read_text())
    params = data["solve"][0]["parameters"]
    assert params["mu"] == pytest.approx(1.0, abs=1e-9)
    assert params["delta"] == pytest.approx(0.22314355, abs=1e-8)
    raw = (tmp_path / "tw_u_profile.csv").read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["xi", "u", "flux"]
    assert float(rows[1][1]) == pytest.approx(1.0)


def test_pipeline_summary_and_determinism(tmp_path):
    args = ("pipeline", fixture_path("tw_constant.json"), "--out", tmp_path, "--t-end", "2")
    assert run_cli(*args) == 0
    first = (tmp_path / "summary.json").read_bytes()
    assert run_cli(*args) == 0
    assert (tmp_path / "summary.json").read_bytes() == first
    data = json.loads(first)
    assert data["schema_version"] == 1 and data["version"] == __version__
    assert "config" in data and data["config"]["t_end"] == 2.0
    assert data["solve"][0]["parameters"]["mu"] == pytest.approx(1.0, abs=1e-9)
    fronts = list(csv.reader((tmp_path / "tw_fronts.csv").read_text().splitlines()))
    assert fronts[0] == ["t", "s1", "s2", "s2_minus_mu_t"]


def test_pipeline_physical_input(tmp_path):
    assert run_cli("pipeline", fixture_path("physical_linear_capacity.json"), "--out", tmp_path,
                   "--t-end", "2") == 0
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["goodman_transform"] is True


def test_no_symmetry_exit_code(tmp_path, capsys):
    assert run_cli("pipeline", fixture_path("nonconforming.json"), "--out", tmp_path) == 2
    assert "rejected" in capsys.readouterr().err
    data = json.loads((tmp_path / "pipeline_error.json").read_text())
    assert data["error"]["stage"] in ("check", "reduce")


def test_input_error_exit_code(tmp_path):
    assert run_cli("classify", tmp_path / "missing.json", "--out", tmp_path) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("classify", bad, "--out", tmp_path) == 1
    assert run_cli("solve", fixture_path("tw_constant.json"), "--out", tmp_path,
                   "--rtol", "-1") == 1


def test_solver_failure_exit_code(tmp_path):
    p = tmp_path / "nosol.json"
    p.write_text(json.dumps({"canonical": {"d1": "1", "d2": "1", "q": "-5", "h": "u",
                                           "u_m": 0.5, "v_m": 1.0, "v_inf": 0.0}}))
    assert run_cli("solve", p, "--out", tmp_path) == 3
    assert (tmp_path / "solve_error.json").exists()


def test_validation_failure_exit_code(tmp_path):
    # an impossible PDE tolerance is not exposed; use a grid too coarse for the 1% front check
    code = run_cli("validate", fixture_path("ss_sqrt_t.json"), "--out", tmp_path,
                   "--n-points", "16")
    assert code == 4


def test_env_var_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("STEFANLIE_OUTPUT_DIR", str(tmp_path / "envout"))
    assert run_cli("classify", fixture_path("exp_exp.json")) == 0
    assert (tmp_path / "envout" / "classify.json").exists()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "stefanlie", "classify", fixture_path("exp_exp.json"),
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "case 3" in r.stdout
