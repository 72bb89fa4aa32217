import json
import subprocess
import sys

import pytest

from irs_isac import cli, harness

TINY = {"geometry": {"n_antennas": 3, "n_elements": 4, "n_users": 2}, "sinr_db": 10.0,
        "trials": 3}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(TINY))
    return path


def run(*args):
    return cli.main([str(a) for a in args])


def test_radar(tmp_path, config_file):
    out = tmp_path / "radar"
    assert run("radar", "--config", config_file, "--out", out) == cli.EXIT_OK
    assert len((out / "pattern.csv").read_text().splitlines()) == 182
    doc = json.loads((out / "summary.json").read_text())
    assert doc["method"] == "radar_only" and len(doc["trials"]) == 1


def test_solve_seed(tmp_path, config_file):
    out = tmp_path / "solve"
    assert run("solve", "--config", config_file, "--out", out, "--seed", 5) == cli.EXIT_OK
    doc = json.loads((out / "summary.json").read_text())
    assert doc["method"] == "proposed" and doc["trials"][0]["seed"] == 5
    assert len(doc["trials"]) == 1
    assert harness.read_pattern_csv(out / "pattern.csv").angles.size == 181
    assert json.loads((out / "timings.json").read_text())["trials"][0]["total_s"] > 0


@pytest.mark.parametrize("command, method", [("sdr", "sdr"), ("solve-robust", "robust")])
def test_other_single_solves(tmp_path, config_file, command, method):
    out = tmp_path / command
    assert run(command, "--config", config_file, "--out", out) == cli.EXIT_OK
    assert json.loads((out / "summary.json").read_text())["method"] == method


def test_mc(tmp_path, config_file):
    out = tmp_path / "mc"
    assert run("mc", "--config", config_file, "--out", out, "--trials", 2) == cli.EXIT_OK
    doc = json.loads((out / "summary.json").read_text())
    assert [t["seed"] for t in doc["trials"]] == [0, 1]


def test_sweep(tmp_path, config_file):
    out = tmp_path / "sweep"
    code = run("sweep", "--config", config_file, "--out", out, "--axis", "sinr_db",
               "--values", "5,10", "--seed", 2)
    assert code == cli.EXIT_OK
    doc = json.loads((out / "sweep.json").read_text())
    assert doc["axis"] == "sinr_db" and doc["values"] == [5.0, 10.0]
    assert [len(r["trials"]) for r in doc["runs"]] == [3, 3]
    assert (out / "sinr_db_5" / "summary.json").exists()


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"geometry": {"n_antenas": 3}}))
    assert run("solve", "--config", bad, "--out", tmp_path / "x") == cli.EXIT_CONFIG
    assert "geometry.n_antenas" in capsys.readouterr().err
    assert run("solve", "--config", tmp_path / "none.json") == cli.EXIT_CONFIG
    bad.write_text(json.dumps({"geometry": {"n_elements": 16}}))
    assert run("sweep", "--config", bad, "--axis", "L", "--values", "2.5") == cli.EXIT_CONFIG


def test_all_infeasible(tmp_path):
    cfg = tmp_path / "hard.json"
    cfg.write_text(json.dumps(dict(TINY, sinr_db=150.0, trials=1)))
    assert run("mc", "--config", cfg, "--out", tmp_path / "h") == cli.EXIT_INFEASIBLE
    assert (tmp_path / "h" / "summary.json").exists()


def test_unwritable_output(tmp_path, config_file):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("radar", "--config", config_file, "--out", blocker / "sub") == 1


def test_module_entry_point(tmp_path, config_file):
    proc = subprocess.run([sys.executable, "-m", "irs_isac.cli", "radar", "--config",
                           str(config_file), "--out", str(tmp_path / "m")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    bad = subprocess.run([sys.executable, "-m", "irs_isac.cli", "mc", "--profile", "lab"],
                         capture_output=True, text=True)
    assert bad.returncode == 2
