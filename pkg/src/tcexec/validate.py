"""Validation suite: oracle, degeneration, convergence and simulation checks.

``run_checks("quick")`` skips the large Monte Carlo checks; ``"full"`` runs
everything.  Each check is numbered after the acceptance criterion it covers.
"""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from .checks import Check, at_least, at_most, holds
from .closedform import basic_L_closed, basic_trajectory_closed
from .coeffs import refine_convergence, solve_basic, solve_signal, solve_stochvol
from .figures import build_figures
from .oracle import (
    deterministic_objective,
    discrete_equilibrium_basic,
    hjb_residual_report,
    linear_trajectory,
    perturbation_optimality_check,
)
from .params import (
    BasicModelParams,
    ParamCurve,
    SignalModelParams,
    StochVolModelParams,
    TimeGrid,
)
from .sim import deterministic_path, simulate_batch, simulate_path, summarize, total_variance_check
from .strategy import make_rule

__all__ = ["LEVELS", "run_checks", "reference_params"]

LEVELS = ("quick", "full")

C = ParamCurve.constant


def reference_params(model: str, n_steps: int = 5000, **overrides):
    """The demonstration parameter sets (buy 100 shares over T = 5)."""
    grid = TimeGrid(5.0, n_steps)
    common = dict(eta=C(0.1), mu=1.0, x0=100.0, s0=100.0, horizon=grid)
    if model == "basic":
        p = BasicModelParams(sigma=C(0.5), **common)
    elif model == "signal":
        p = SignalModelParams(theta=C(0.2), sigma1=C(0.5), sigma2=C(0.5), alpha0=102.0, **common)
    elif model == "stochvol":
        p = StochVolModelParams(a_xi=C(0.0), b_xi=C(0.1), xi0=1.0, **common)
    else:
        raise ValueError(model)
    return replace(p, **overrides) if overrides else p


def _c1_closed_form(out):
    p = reference_params("basic")
    t0 = time.perf_counter()
    tab = solve_basic(p, 5e-3)
    elapsed = time.perf_counter() - t0
    ref = np.array([basic_L_closed(t, p.mu, 0.5, 0.1, p.T) for t in tab.t])
    err = float(np.max(np.abs(tab.L - ref) / ref))
    out.append(at_most("c1 basic L vs closed form (max rel)", err, 1e-6))
    out.append(at_most("c1 basic solve runtime [s]", elapsed, 1.0))


def _c2_degeneration(out):
    p = reference_params("signal", theta=C(0.0))
    sig = solve_signal(p, 5e-3)
    bas = solve_basic(reference_params("basic"), 5e-3)
    for name in ("F", "M", "N"):
        out.append(at_most(f"c2 theta=0 sup|{name}|", float(np.max(np.abs(sig.column(name)))), 1e-8))
    rel = float(np.max(np.abs(sig.D - bas.L) / bas.L))
    out.append(at_most("c2 theta=0 D vs basic L (max rel)", rel, 1e-8))


def _c3_discrete_oracle(out):
    p = reference_params("basic")
    traj = discrete_equilibrium_basic(p, 5000)
    ref = basic_trajectory_closed(traj.t, p.x0, p.mu, 0.5, 0.1, p.T)
    err = float(np.max(np.abs(traj.X - ref))) / abs(p.x0)
    out.append(at_most("c3 discrete equilibrium vs sinh trajectory", err, 1e-3))
    obj = deterministic_objective(traj, p.mu, p.sigma, p.eta)
    L0 = solve_basic(p).L[0]
    value = p.x0 ** 2 * L0
    out.append(at_most("c3 equilibrium objective vs x0^2 L(0) (rel)", abs(obj - value) / value, 1e-3))
    return p, traj, obj


def _c4_residuals(out):
    for model, solver in (("basic", solve_basic), ("signal", solve_signal), ("stochvol", solve_stochvol)):
        p = reference_params(model, n_steps=20000)
        rep = hjb_residual_report(model, solver(p, 5e-3), p, 1000, seed=1)
        out.append(at_most(f"c4 {model} scaled PDE residual", rep.max_scaled, 1e-4,
                           f"worst t={rep.worst['t']:.4g}"))


def _c5_convergence(out):
    for model in ("basic", "signal", "stochvol"):
        rep = refine_convergence(reference_params(model, n_steps=250), 0.04, 250)
        orders = rep.observed_orders
        if not orders:
            out.append(holds(f"c5 {model} convergence order", False, "no measurable differences"))
            continue
        lo, hi = min(orders.values()), max(orders.values())
        ok = 3.5 <= lo and hi <= 4.5
        out.append(Check(f"c5 {model} convergence order", lo, "in [3.5, 4.5]", ok,
                         f"range [{lo:.3f}, {hi:.3f}] over {sorted(orders)}"))


def _c6_risk_neutral(out):
    p = reference_params("basic", mu=0.0)
    tab = solve_basic(p, 5e-3)
    ref = 0.1 / (p.T - tab.t)
    out.append(at_most("c6 mu=0 L vs eta/(T-t) (max rel)", float(np.max(np.abs(tab.L - ref) / ref)), 1e-8))

    q = reference_params("stochvol", mu=0.0)
    rule = make_rule(q, solve_stochvol(q, 5e-3))
    t = rule.table.t[:-1]
    a, b, c = rule.gains(t)
    ref = 1.0 / (q.T - t)
    xi = 1.0
    dev = float(np.max(np.abs(a * q.x0 + b * xi + c - ref * q.x0) / (ref * q.x0)))
    out.append(at_most("c6 mu=0 stochvol rate vs X/(T-t) (max rel)", dev, 1e-8))

    lin = linear_trajectory(100.0, 5.0, 5000)
    cost = deterministic_objective(lin, 0.0, C(0.5), C(0.1))
    out.append(at_most("c6 linear trajectory impact cost vs 200 (rel)", abs(cost - 200.0) / 200.0, 1e-6))


def _c7_invariants(out, n_paths=10_000):
    seeds = range(1, n_paths + 1)
    for model in ("basic", "signal", "stochvol"):
        p = reference_params(model)
        rule = make_rule(p)
        first = simulate_batch(p, rule, seeds)
        out.append(holds(f"c7 {model} X_N = 0 on all {n_paths} paths", bool(np.all(first.X_final == 0.0))))
        if model == "basic":
            out.append(at_least("c7 basic min holdings over all paths", float(first.X_min.min()), 0.0))
        again = simulate_batch(p, rule, seeds)
        same = first.cost.tobytes() == again.cost.tobytes()
        single = simulate_path(p, rule, seeds[n_paths // 2])
        same &= single.cost == first.cost[n_paths // 2]
        out.append(holds(f"c7 {model} reruns bit-identical", bool(same)))


def _c8_statistics(out):
    p = reference_params("basic", n_steps=1000)
    rule = make_rule(p)
    batch = simulate_batch(p, rule, range(1, 100_001))
    s = summarize(batch.cost, p.mu)
    det = deterministic_path(p, rule).cost
    z = abs(s.mean_cost - det) / s.std_error_mean
    out.append(at_most("c8 mean cost vs equilibrium impact cost [std errors]", z, 3.0,
                       f"mean={s.mean_cost:.6g} target={det:.6g}"))
    dec = total_variance_check(p, rule, 2.5, 500, 500, base_seed=1)
    out.append(at_most("c8 total-variance gap at tau=2.5", dec.gap, 0.05))


def _c9_local_optimality(out, p, traj, obj):
    worst = math.inf
    for k in range(1, traj.N):
        for d in (0.1, -0.1):
            worst = min(worst, perturbation_optimality_check(p, traj, k, d))
    out.append(at_least("c9 min objective change under X_k +/- 0.1", worst, -1e-12 * obj))


def _c10_figures(out):
    data = build_figures()
    failed = [c.name for c in data.checks if not c.passed]
    out.append(holds(f"c10 figure self-checks ({len(data.checks)})", not failed, "; ".join(failed)))


def run_checks(level: str = "quick") -> list[Check]:
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    out: list[Check] = []
    _c1_closed_form(out)
    _c2_degeneration(out)
    p, traj, obj = _c3_discrete_oracle(out)
    _c4_residuals(out)
    _c5_convergence(out)
    _c6_risk_neutral(out)
    if level == "full":
        _c7_invariants(out)
        _c8_statistics(out)
    _c9_local_optimality(out, p, traj, obj)
    _c10_figures(out)
    return out


def report(checks: list[Check], level: str) -> dict:
    return {"level": level, "passed": all(c.passed for c in checks), "checks": [c.as_dict() for c in checks]}
