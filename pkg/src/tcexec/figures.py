"""Plot-ready data for the demonstration figures, with built-in self-checks.

Three families are produced:

* ``fig1_rates.csv`` / ``fig1_holdings.csv``: noise-free basic-model rate and
  holdings curves over a grid of constant ``(sigma, eta)``;
* one CSV per signal scenario ``(alpha0, theta)`` with four seeded paths
  (the same seeds in every scenario, so the W draws match);
* ``stochvol_paths.csv`` with seeded paths and their market-state trajectories.

Every file has a ``t`` column followed by one column per curve.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .checks import Check, at_most, holds
from .coeffs import solve_basic, solve_signal, solve_stochvol
from .params import (
    BasicModelParams,
    ParamCurve,
    TimeGrid,
    builtin_config_text,
    load_config,
)
from .sim import deterministic_path, simulate_batch
from .strategy import make_rule

__all__ = ["FigureData", "build_figures", "write_figures", "load_figure_config"]


@dataclass
class FigureData:
    tables: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def load_figure_config(doc: dict | None = None) -> dict:
    if doc is None:
        doc = json.loads(builtin_config_text("figures"))
    for key in ("basic_grid", "signal_scenarios", "signal_base", "stochvol_base", "n_paths", "seed"):
        if key not in doc:
            raise KeyError(f"figure config lacks {key!r}")
    return doc


def _base(name: str, n_steps: int | None):
    text = builtin_config_text(name.removesuffix(".json"))
    params = load_config(text)
    if n_steps is not None:
        params = replace(params, horizon=TimeGrid(params.T, n_steps))
    return params


def _tag(x: float) -> str:
    return f"{x:g}"


def _figure1(doc: dict, n_steps: int | None, out: FigureData) -> None:
    g = doc["basic_grid"]
    grid = TimeGrid(float(g["T"]), int(n_steps or g["n_steps"]))
    rates, holds_ = {"t": grid.times}, {"t": grid.times}
    family = []
    for sigma in g["sigma"]:
        for eta in g["eta"]:
            p = BasicModelParams(ParamCurve.constant(sigma), ParamCurve.constant(eta), float(g["mu"]),
                                 float(g["x0"]), float(g["s0"]), grid)
            path = deterministic_path(p, make_rule(p, solve_basic(p)))
            key = f"s{_tag(sigma)}_e{_tag(eta)}"
            rates[f"v_{key}"] = path.v
            holds_[f"X_{key}"] = path.X
            half = grid.n_steps // 2
            family.append((p.mu * sigma * sigma / eta, path.v[0], path.v[half] / path.v[0], key))
    out.tables["fig1_rates"] = rates
    out.tables["fig1_holdings"] = holds_

    family.sort()
    ok_start, ok_decay, bad = True, True, []
    for (k1, v1, r1, n1), (k2, v2, r2, n2) in zip(family, family[1:]):
        tie = abs(k2 - k1) <= 1e-12 * k2
        if tie:
            same = abs(v2 - v1) <= 1e-9 * v2
            ok_start &= same
            if not same:
                bad.append(f"{n1}~{n2}")
        else:
            if not v2 > v1:
                ok_start = False
                bad.append(f"{n1}<{n2}")
            if not r2 < r1:
                ok_decay = False
                bad.append(f"decay {n1}<{n2}")
    out.checks.append(holds("fig1 initial rate increases with mu sigma^2/eta", ok_start, ",".join(bad)))
    out.checks.append(holds("fig1 rate decays faster with mu sigma^2/eta", ok_decay))


def _figure_signal(doc: dict, n_steps: int | None, out: FigureData) -> None:
    base = _base(doc["signal_base"], n_steps)
    seeds = range(int(doc["seed"]), int(doc["seed"]) + int(doc["n_paths"]))
    basic = BasicModelParams(base.sigma1, base.eta, base.mu, base.x0, base.s0, base.horizon)
    basic_rule = make_rule(basic, solve_basic(basic))
    v_basic = basic_rule.rate(0.0, base.x0)

    starts = {}
    for sc in doc["signal_scenarios"]:
        theta = float(sc["theta"])
        p = replace(base, alpha0=float(sc["alpha0"]), theta=ParamCurve.constant(theta))
        table = solve_signal(p)
        rule = make_rule(p, table)
        batch = simulate_batch(p, rule, seeds, keep_paths=True)
        cols = {"t": batch.paths[0].t}
        for i, rec in enumerate(batch.paths):
            cols[f"S_{i}"] = rec.S
            cols[f"alpha_{i}"] = rec.extra
            cols[f"X_{i}"] = rec.X
            cols[f"v_{i}"] = rec.v
        out.tables[sc["name"]] = cols

        v0 = rule.rate(0.0, p.x0, p.beta0)
        v_flat = rule.rate(0.0, p.x0, 0.0)
        starts[(theta, p.alpha0)] = v0
        name = sc["name"]
        if theta > 0:
            out.checks.append(holds(f"{name} F(0) < 0", table.F[0] < 0, f"F(0)={table.F[0]:.6g}"))
            if p.beta0 > 0:
                ok = v0 < v_flat
                word = "slows"
            elif p.beta0 < 0:
                ok = v0 > v_flat
                word = "accelerates"
            else:
                ok, word = abs(v0 - v_flat) <= 1e-12 * abs(v_flat), "leaves"
            out.checks.append(holds(f"{name} beta0={p.beta0:g} {word} buying", ok,
                                    f"v0={v0:.6g} vs beta=0 {v_flat:.6g}"))
            if p.beta0 > 0:
                out.checks.append(holds(f"{name} starts below the theta=0 baseline", v0 < v_basic,
                                        f"v0={v0:.6g} vs {v_basic:.6g}"))
        else:
            a_sig, b_sig, _ = rule.gains(table.t)
            a_bas, _, _ = basic_rule.gains(table.t)
            gap = float(np.max(np.abs(a_sig - a_bas) / a_bas))
            out.checks.append(at_most(f"{name} rate gain matches basic", gap, 1e-10))
            out.checks.append(at_most(f"{name} signal gain vanishes", float(np.max(np.abs(b_sig))), 1e-10))
            ref = deterministic_path(basic, basic_rule)
            xgap = max(float(np.max(np.abs(r.X - ref.X))) for r in batch.paths) / abs(p.x0)
            out.checks.append(at_most(f"{name} holdings match basic curve", xgap, 1e-10))

    for theta in sorted({t for t, _ in starts if t > 0}):
        hi, lo = starts.get((theta, 102.0)), starts.get((theta, 98.0))
        if hi is not None and lo is not None:
            out.checks.append(holds(f"theta={theta:g} alpha0=102 buys faster than alpha0=98", hi > lo,
                                    f"{hi:.6g} vs {lo:.6g}"))


def _figure_stochvol(doc: dict, n_steps: int | None, out: FigureData) -> None:
    p = _base(doc["stochvol_base"], n_steps)
    seeds = range(int(doc["seed"]), int(doc["seed"]) + int(doc["n_paths"]))
    batch = simulate_batch(p, make_rule(p, solve_stochvol(p)), seeds, keep_paths=True)
    cols = {"t": batch.paths[0].t}
    for i, rec in enumerate(batch.paths):
        cols[f"xi_{i}"] = rec.extra
        cols[f"S_{i}"] = rec.S
        cols[f"X_{i}"] = rec.X
        cols[f"v_{i}"] = rec.v
    out.tables["stochvol_paths"] = cols
    out.checks.append(holds("stochvol paths finish liquidated", bool(np.all(batch.X_final == 0.0))))


def build_figures(doc: dict | None = None, n_steps: int | None = None) -> FigureData:
    """Compute every figure table and its self-checks.

    ``n_steps`` overrides the grid of every config (handy for quick runs).
    """
    doc = load_figure_config(doc)
    out = FigureData()
    _figure1(doc, n_steps, out)
    _figure_signal(doc, n_steps, out)
    _figure_stochvol(doc, n_steps, out)
    return out


def _write_columns(path, cols: dict[str, np.ndarray]) -> None:
    names = list(cols)
    n = max(len(c) for c in cols.values())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for k in range(n):
            w.writerow([f"{cols[c][k]:.17g}" if k < len(cols[c]) else "" for c in names])


def write_figures(data: FigureData, outdir) -> list[str]:
    """Write every table plus ``figures_checks.json``; returns the file names."""
    from pathlib import Path

    outdir = Path(outdir)
    names = []
    for name, cols in data.tables.items():
        fname = f"{name}.csv"
        _write_columns(outdir / fname, cols)
        names.append(fname)
    report = {"passed": data.passed, "checks": [c.as_dict() for c in data.checks]}
    (outdir / "figures_checks.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    names.append("figures_checks.json")
    return names
