import json

import numpy as np
import pytest

from tcexec.figures import build_figures, write_figures


@pytest.fixture(scope="module")
def figs():
    return build_figures(n_steps=1000)


def test_self_checks_pass(figs):
    assert figs.checks
    assert figs.passed, [c.line() for c in figs.checks if not c.passed]


def test_tables(figs):
    assert set(figs.tables) >= {"fig1_rates", "fig1_holdings", "stochvol_paths", "signal_a98_th0.2"}
    rates = figs.tables["fig1_rates"]
    assert len(rates) == 10
    sig = figs.tables["signal_a102_th0.2"]
    assert [k for k in sig if k.startswith("X_")] == ["X_0", "X_1", "X_2", "X_3"]


def test_same_draws_across_scenarios(figs):
    # same seeds, so the signal paths see identical signal noise
    a = figs.tables["signal_a102_th0.2"]["alpha_0"] - 102
    b = figs.tables["signal_a98_th0.2"]["alpha_0"] - 98
    assert np.allclose(a, b, atol=1e-12)


def test_write(tmp_path, figs):
    names = write_figures(figs, tmp_path)
    assert "figures_checks.json" in names
    for n in names:
        assert (tmp_path / n).exists()
    report = json.loads((tmp_path / "figures_checks.json").read_text())
    assert report["passed"] is True
    head = (tmp_path / "fig1_rates.csv").read_text().splitlines()[0].split(",")
    assert head[0] == "t" and len(head) == 10
