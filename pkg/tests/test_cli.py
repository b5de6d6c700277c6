import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from nlslab.cli import main
from nlslab.config import SCHEMA, load_config
from nlslab.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def _run(*args, env=None):
    full_env = dict(os.environ, **(env or {}))
    return subprocess.run([sys.executable, "-m", "nlslab", *map(str, args)], capture_output=True, text=True,
                          env=full_env, timeout=600)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------- eig

def test_eig_outputs_and_weyl_slope(tmp_path):
    res = _run("eig", "--n", 512, "--beta", 1.0, "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    rates = json.loads((tmp_path / "rates.json").read_text())
    assert rates["weyl"]["slope"] == pytest.approx(1.0, abs=0.05)
    rows = _read_csv(tmp_path / "eig.csv")
    assert rows[0] == ["j", "lambda"]
    assert len(rows) == 513
    fun = _read_csv(tmp_path / "eigfun.csv")
    assert fun[0][0] == "x" and len(fun[0]) == 6


def test_eig_is_byte_identical_on_rerun(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run("eig", "--n", 128, "--out", a).returncode == 0
    assert _run("eig", "--n", 128, "--out", b).returncode == 0
    for name in ("eig.csv", "eigfun.csv", "rates.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert b"\r\n" not in (a / "eig.csv").read_bytes()


def test_small_grid_exits_with_config_error(tmp_path):
    res = _run("eig", "--n", 8, "--out", tmp_path)
    assert res.returncode == 2
    assert "n >= 16" in res.stderr


# ---------------------------------------------------------------- other commands

def test_verify_passes_at_512(tmp_path):
    res = _run("verify", "--n", 512, "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["passed"]
    for suite in report["suites"].values():
        assert suite["passed"]
        for check in suite["checks"]:
            assert "tolerance" in check and "value" in check


def test_verify_failure_exit_code(tmp_path):
    # the principal-mode rate is not resolved on a coarse grid
    res = _run("verify", "--n", 256, "--out", tmp_path)
    assert res.returncode == 4
    assert "FAIL" in res.stderr


def test_sweep_brackets_critical_exponent(tmp_path):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text("[sweep]\nlevels = 128,256,512\n")
    res = _run("sweep", "--config", cfg, "--out", tmp_path, env={"NLSLAB_THREADS": "2"})
    assert res.returncode == 0, res.stderr
    summary = json.loads((tmp_path / "sweep_summary.json").read_text())
    lo, hi = summary["boundary"]
    assert lo < 1.5 < hi
    assert summary["brackets_critical"]
    rows = _read_csv(tmp_path / "sweep.csv")
    assert rows[0] == ["p", "n", "class", "surrogate", "residual", "boundary_exponent"]


def test_bad_thread_count(tmp_path):
    res = _run("sweep", "--out", tmp_path, env={"NLSLAB_THREADS": "zero"})
    assert res.returncode == 2


def test_poisson_rate(tmp_path):
    res = _run("poisson", "--n", 512, "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    rates = json.loads((tmp_path / "poisson_rates.json").read_text())
    assert rates["p_sigma"]["exponent"] == pytest.approx(-1.0, abs=0.1)
    assert _read_csv(tmp_path / "poisson.csv")[0][:3] == ["x", "P_a", "P_b"]


def test_green_outputs(tmp_path):
    res = _run("green", "--n", 128, "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    env = json.loads((tmp_path / "envelope.json").read_text())
    assert env["green"]["width"] > 1
    rows = _read_csv(tmp_path / "green.csv")
    assert len(rows) == 129 and len(rows[0]) == 129


def test_solve_with_example_config(tmp_path):
    res = _run("solve", "--config", CONFIGS / "absorption.ini", "--n", 256, "--out", tmp_path)
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["converged"] and report["method"] == "absorption"
    assert report["critical_exponent"] == pytest.approx(1.5)
    rows = _read_csv(tmp_path / "solution.csv")
    assert rows[0] == ["x", "u", "P_zeta"] and len(rows) == 257


def test_main_in_process(tmp_path):
    assert main(["eig", "--n", "64", "--out", str(tmp_path)]) == 0
    # too few boundary layers for a rate fit on this grid: reported, not fatal
    assert "unavailable" in json.loads((tmp_path / "rates.json").read_text())["hopf"]
    assert main(["eig", "--n", "64", "--beta", "2.5", "--out", str(tmp_path)]) == 2


# ---------------------------------------------------------------- configuration

def test_schema_file_lists_every_key_and_loads():
    text = (CONFIGS / "schema.ini").read_text()
    for sec, keys in SCHEMA.items():
        assert f"[{sec}]" in text
        for key in keys:
            assert f"\n{key} =" in text
    cfg = load_config(CONFIGS / "schema.ini")
    assert cfg.n == 512 and cfg.psi_s is None


@pytest.mark.parametrize("name", ["absorption.ini", "sweep_theta1.ini"])
def test_example_configs_load(name):
    load_config(CONFIGS / name)


def test_config_errors_are_aggregated(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[domain]\nn = 4\n[operator]\nbeta = 3\n[colour]\nhue = red\n[solver]\nspeed = 9\n")
    with pytest.raises(ConfigError) as info:
        load_config(cfg)
    msg = str(info.value)
    for fragment in ("n >= 16", "beta must lie in (0, 2)", "unknown section [colour]", "unknown key 'speed'"):
        assert fragment in msg


def test_config_type_errors(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[domain]\nn = many\n")
    with pytest.raises(ConfigError, match="cannot read 'many' as int"):
        load_config(cfg)


def test_overrides_beat_file(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[domain]\nn = 300\n")
    assert load_config(cfg, {"n": 64, "beta": None}).n == 64


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_psi_families_from_config(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[operator]\npsi_family = relativistic\npsi_s = 0.5\npsi_mass = 2\n")
    assert load_config(cfg).psi.family.value == "relativistic"
    cfg.write_text("[operator]\npsi_family = tempered\n")
    with pytest.raises(ConfigError, match="psi_tempering > 0"):
        load_config(cfg)
