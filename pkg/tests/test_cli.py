import json
import subprocess
import sys

import numpy as np
import pytest

from covcalc import cli
from covcalc.config import ConfigError, parse_config


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_measure_csv(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert run("measure", "--kernel", "bm", "--n", 4, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "i,j,mass" and len(lines) == 5
    assert lines[1] == "0,0,0.25"
    assert "grid energy" in capsys.readouterr().out


def test_simulate_binary_and_csv(tmp_path):
    b, c = tmp_path / "p.bin", tmp_path / "p.csv"
    assert run("simulate", "--kernel", "fbm:H=0.7", "--n", 8, "--paths", 10, "--out", b) == 0
    assert b.read_bytes()[:4] == b"CVC1"
    assert run("simulate", "--kernel", "fbm:H=0.7", "--n", 8, "--paths", 10, "--out", c) == 0
    assert c.read_text().startswith("path,x_0,")


def test_integrate_json(tmp_path, capsys):
    j = tmp_path / "i.json"
    assert run("integrate", "--kernel", "bm", "--n", 16, "--paths", 2000, "--integrand", "indicator:0,1",
               "--json", j) == 0
    doc = json.loads(j.read_text())
    assert set(doc) == {"M", "mean", "std_error", "metadata"}
    assert abs(doc["mean"]) < 4 * doc["std_error"]
    assert json.loads(capsys.readouterr().out) == doc


@pytest.mark.parametrize("mode, integrand", [("forward", "fprime:poly:0,1"), ("backward", "step:[(0,0.5,1.0)]"),
                                             ("symmetric", "fprime:poly:1"), ("skorohod-trace", "fprime:poly:0,1")])
def test_integrate_modes(mode, integrand, capsys):
    assert run("integrate", "--n", 16, "--paths", 50, "--mode", mode, "--integrand", integrand,
               "--eps", 0.125) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["metadata"]["mode"] == mode


def test_verify_json_and_plotdata(tmp_path):
    j, pd = tmp_path / "v.json", tmp_path / "plots"
    code = run("verify", "--kernel", "bifbm:H=0.75,K=0.6667", "--suite", "gamma", "--n", 64,
               "--json", j, "--plotdata", pd)
    assert code == 0
    doc = json.loads(j.read_text())
    assert doc["suite"] == "gamma" and doc["checks"][0]["pass"] is True
    assert set(doc["checks"][0]) == {"name", "value", "reference", "tolerance", "pass", "tag", "hard"}
    assert (pd / "gamma_split.csv").read_text().startswith("t,gamma,energy")


def test_verify_hard_failure_exit(tmp_path):
    # a one-sample-per-block tolerance too strict for any estimate
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kernel": "bm", "n": 64, "M": 200, "suite": "qv",
                               "tolerances": {"mc_sigmas": 1e-9}}))
    assert run("verify", "--config", cfg) == 1


def test_report(tmp_path):
    out = tmp_path / "rep"
    code = run("report", "--kernel", "bifbm:H=0.75,K=0.6667", "--n", 64, "--paths", 500,
               "--scan", "16,64", "--outdir", out)
    assert code in (0, 1)
    doc = json.loads((out / "report.json").read_text())
    suites = {c["name"].split("/")[0] for c in doc["checks"]}
    assert suites == {"qv", "ito", "gamma", "chaos", "quasihelix"}
    assert (out / "energy_curve.csv").exists() and (out / "chaos_isometry.csv").exists()


@pytest.mark.parametrize("argv", [
    ["measure", "--kernel", "fbm:Z=1"],
    ["measure", "--kernel", "fbm:H=0.7", "--n", "0"],
    ["measure", "--bogus", "1"],
    ["verify", "--suite", "nope"],
    ["verify", "--kernel", "fbm:H=0.7", "--suite", "quasihelix", "--n", "16"],
    ["integrate", "--n", "16", "--paths", "10"],
    ["integrate", "--n", "16", "--paths", "10", "--integrand", "indicator:0,1", "--upto", "0.3"],
    ["integrate", "--n", "16", "--paths", "10", "--integrand", "wave:1", "--mode", "forward"],
    [],
])
def test_config_errors(argv):
    assert cli.main(argv) == 2


def test_malformed_config(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"kernel": "bm",\n "n": }')
    assert run("measure", "--config", p) == 2
    assert "line 2" in capsys.readouterr().err


def test_not_psd_exit(tmp_path):
    # for H near 1 on a long horizon the piecewise Q is no longer a valid variogram
    assert run("simulate", "--kernel", "statinc:Q=paper_piecewise,H=0.95", "--T", 5, "--n", 64, "--paths", 2) == 3


def test_flags_override_file():
    cfg = parse_config({"n": 32, "kernel": "bm"}, {"n": 64})
    assert cfg.n == 64 and cfg.kernel == "bm"
    with pytest.raises(ConfigError):
        parse_config({"n": "many"})
    with pytest.raises(ConfigError):
        parse_config({"tolerances": {"mc_sigmas": -1}})


def test_threads_env_reproducible(tmp_path, monkeypatch):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    monkeypatch.setenv("COVCALC_THREADS", "1")
    run("simulate", "--kernel", "bifbm:H=0.75,K=0.6667", "--n", 32, "--paths", 1000, "--out", a)
    monkeypatch.setenv("COVCALC_THREADS", "4")
    run("simulate", "--kernel", "bifbm:H=0.75,K=0.6667", "--n", 32, "--paths", 1000, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "covcalc.cli", "measure", "--kernel", "bm", "--n", "4"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "planar variation" in r.stdout
