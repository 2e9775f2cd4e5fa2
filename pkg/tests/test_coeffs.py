import math
from dataclasses import replace

import numpy as np
import pytest

from tcexec.closedform import basic_L_closed
from tcexec.coeffs import (
    SolverError,
    default_cutoff,
    read_table_csv,
    refine_convergence,
    solve,
    solve_basic,
    solve_signal,
    solve_stochvol,
)
from tcexec.params import ParamCurve, TimeGrid
from tcexec.validate import reference_params

C = ParamCurve.constant


def test_basic_matches_closed_form(basic_table):
    ref = np.array([basic_L_closed(t, 1.0, 0.5, 0.1, 5.0) for t in basic_table.t])
    assert np.max(np.abs(basic_table.L / ref - 1)) < 1e-10
    assert basic_table.L[0] == pytest.approx(0.15811392598198, rel=1e-12)


def test_default_cutoff_and_storage(basic_params, basic_table):
    eps = default_cutoff(basic_params.horizon)
    assert eps == pytest.approx(5e-3)
    assert basic_table.cutoff == pytest.approx(eps)
    assert basic_table.t[-1] == pytest.approx(5.0 - eps)
    assert len(basic_table.t) == 5000 - 5 + 1


def test_cutoff_is_snapped_to_grid(basic_params):
    tab = solve_basic(basic_params, 0.00512)
    assert tab.cutoff == pytest.approx(5e-3)


def test_bad_cutoff(basic_params):
    with pytest.raises(ValueError):
        solve_basic(basic_params, 10.0)


def test_risk_neutral_basic():
    p = reference_params("basic", mu=0.0)
    tab = solve_basic(p)
    ref = 0.1 / (5.0 - tab.t)
    assert np.max(np.abs(tab.L / ref - 1)) < 1e-12
    assert np.max(np.abs(tab.Lf / ref - 1)) < 1e-12


def test_signal_theta_zero_degenerates(basic_table):
    p = reference_params("signal", theta=C(0.0))
    tab = solve_signal(p)
    for name in ("F", "M", "N"):
        assert np.all(tab.column(name) == 0.0)
    assert np.max(np.abs(tab.D / basic_table.L - 1)) < 1e-12


def test_signal_signs(signal_table):
    # the buy rate falls when the price sits above the signal
    assert signal_table.F[0] < 0
    assert signal_table.D[0] == pytest.approx(0.13, abs=1e-3)


def test_stochvol_structure(stochvol_table):
    tau = 5.0 - stochvol_table.t
    assert np.all(stochvol_table.N == 0.0)
    assert np.max(np.abs(stochvol_table.D * tau / 0.1 - 1)) < 1e-12
    # with zero market-state drift the cross coefficient grows like mu tau^2 / 3
    assert np.max(np.abs(stochvol_table.F - tau ** 2 / 3)) < 1e-10
    for name in ("G", "O", "P"):
        assert np.all(stochvol_table.column(name) == 0.0)


def test_time_varying_eta_runs():
    p = reference_params("basic", eta=ParamCurve.sampled([[0, 0.05], [5, 0.2]]), n_steps=1000)
    tab = solve_basic(p)
    assert np.all(np.isfinite(tab.L)) and np.all(tab.L > 0)
    # near the horizon L ~ eta(T) / (T - t)
    assert tab.L[-1] * tab.cutoff / 0.2 == pytest.approx(1.0, rel=1e-2)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_solver_error_on_blowup():
    p = reference_params("basic", sigma=C(1e200), n_steps=100)
    with pytest.raises(SolverError):
        solve_basic(p)


@pytest.mark.parametrize("model", ["basic", "signal", "stochvol"])
def test_fourth_order(model):
    rep = refine_convergence(reference_params(model, n_steps=250), 0.04, 250)
    orders = rep.observed_orders
    assert orders
    assert all(3.5 <= v <= 4.5 for v in orders.values()), orders


def test_csv_round_trip(tmp_path, signal_params, signal_table):
    path = tmp_path / "c.csv"
    signal_table.write_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "t,D,E,F,H,I,Lf,M,N,Q"
    back = read_table_csv(path, "signal", signal_params.horizon, signal_table.cutoff)
    for name in signal_table.COLUMNS:
        assert np.array_equal(back.column(name), signal_table.column(name))


def test_homogeneity_in_eta():
    # scaling eta and mu sigma^2 together scales L by the same factor
    p = reference_params("basic", n_steps=500)
    q = replace(p, eta=C(0.3), sigma=C(0.5 * math.sqrt(3)))
    a, b = solve(p).L, solve(q).L
    assert np.max(np.abs(b / (3 * a) - 1)) < 1e-12
