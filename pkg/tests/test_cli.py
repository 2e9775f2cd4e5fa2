import json
import subprocess
import sys

import numpy as np
import pytest

import tcexec.validate
from tcexec.cli import main


def run(*argv):
    return main(list(argv))


def test_solve_basic(tmp_path):
    assert run("solve", "builtin:basic", "-o", str(tmp_path)) == 0
    lines = (tmp_path / "coeffs.csv").read_text().splitlines()
    assert lines[0] == "t,L,Lf"
    assert float(lines[1].split(",")[1]) == pytest.approx(0.158113926, rel=1e-8)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["artifacts"] == ["coeffs.csv"] and man["command"] == "solve"


def test_solve_signal_theta_zero(tmp_path):
    doc = {"model": "signal", "theta": 0, "sigma1": 0.5, "sigma2": 0.5, "eta": 0.1, "mu": 1,
           "x0": 100, "s0": 100, "alpha0": 102, "T": 5, "n_steps": 500}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    assert run("solve", str(path), "-o", str(tmp_path / "out")) == 0
    data = np.genfromtxt(tmp_path / "out" / "coeffs.csv", delimiter=",", names=True)
    for name in ("F", "M", "N"):
        assert np.all(data[name] == 0.0)


def test_malformed_config_writes_nothing(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": "basic", "sigma": 0.5}')
    out = tmp_path / "out"
    assert run("solve", str(bad), "-o", str(out)) == 1
    assert not out.exists()
    assert "missing" in capsys.readouterr().err


def test_bad_flags_exit_1(tmp_path):
    with pytest.raises(SystemExit) as info:
        run("simulate", "builtin:basic", "--paths", "x", "-o", str(tmp_path))
    assert info.value.code == 1
    assert run("simulate", "builtin:basic", "--paths", "0", "-o", str(tmp_path / "o")) == 1


def test_solver_failure_exit_2(tmp_path):
    doc = {"model": "basic", "sigma": 1e200, "eta": 0.1, "mu": 1, "x0": 1, "s0": 1, "T": 5, "n_steps": 100}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    with np.errstate(all="ignore"):
        assert run("solve", str(path), "-o", str(tmp_path / "o")) == 2


def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("simulate", "builtin:basic", "-o", str(d), "--paths", "1", "--seed", "7", "--emit-paths", "1") == 0
    for name in ("summary.json", "path_7.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    assert man["artifacts"] == ["summary.json", "path_7.csv"]


def test_simulate_stochvol(tmp_path):
    assert run("simulate", "builtin:stochvol", "-o", str(tmp_path), "--paths", "20", "--steps", "500") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["all_liquidated"] is True and summary["n_paths"] == 20


def test_simulate_signal_direction(tmp_path):
    base = {"model": "signal", "theta": 0.2, "sigma1": 0.5, "sigma2": 0.5, "eta": 0.1, "mu": 1,
            "x0": 100, "s0": 100, "T": 5, "n_steps": 500}
    first = {}
    for a0 in (102, 98):
        cfg = tmp_path / f"a{a0}.json"
        cfg.write_text(json.dumps({**base, "alpha0": a0}))
        out = tmp_path / f"o{a0}"
        assert run("simulate", str(cfg), "-o", str(out), "--paths", "1", "--seed", "3", "--emit-paths", "1") == 0
        row = (out / "path_3.csv").read_text().splitlines()[1].split(",")
        first[a0] = float(row[4])
    assert first[102] > first[98]


def test_validate_corrupted_table_exits_3(monkeypatch, capsys):
    real = tcexec.validate.solve_basic

    def corrupted(params, cutoff=None):
        tab = real(params, cutoff)
        from dataclasses import replace
        return replace(tab, L=tab.L * (1 + 1e-4))

    monkeypatch.setattr(tcexec.validate, "solve_basic", corrupted)
    monkeypatch.setattr(tcexec.validate, "_c4_residuals", lambda out: None)
    monkeypatch.setattr(tcexec.validate, "_c5_convergence", lambda out: None)
    monkeypatch.setattr(tcexec.validate, "_c10_figures", lambda out: None)
    assert run("validate", "--level", "quick") == 3
    err = capsys.readouterr()
    assert "[FAIL] c1 basic L vs closed form" in err.out
    assert "c1 basic L vs closed form" in err.err


def test_figures_command(tmp_path, monkeypatch):
    import tcexec.figures as figs

    orig = figs.build_figures
    monkeypatch.setattr(figs, "build_figures", lambda: orig(n_steps=500))
    assert run("figures", "-o", str(tmp_path)) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    for name in man["artifacts"]:
        assert (tmp_path / name).exists()
    assert "figures_checks.json" in man["artifacts"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tcexec", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
