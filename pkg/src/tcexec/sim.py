"""Seeded Monte Carlo simulation of the execution models under a feedback rule.

Paths use explicit first-order stepping on a uniform grid.  The rate is held
constant over each step and the last step liquidates whatever is left, so
``X_N = 0`` on every path.  Normal draws come from a Philox counter-based
generator keyed by ``(seed, stream)``; row ``k`` of a stream drives step ``k``,
so a path is a pure function of its seed regardless of batching.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .params import ModelParams, TimeGrid
from .strategy import StrategyRule

__all__ = [
    "PathRecord",
    "PathBatch",
    "SimSummary",
    "VarianceDecomposition",
    "normals",
    "simulate_path",
    "simulate_batch",
    "estimate_mean_variance",
    "total_variance_check",
    "replay_cost",
    "deterministic_path",
]

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
NOISE_DIMS = {"basic": 1, "signal": 2, "stochvol": 2}
CHUNK = 1024


def normals(seed: int, stream: int, n_steps: int, dims: int) -> np.ndarray:
    """Standard normal draws of shape ``(n_steps, dims)`` for ``(seed, stream)``."""
    key = (int(seed) & _MASK64) | ((int(stream) & _MASK64) << 64)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.standard_normal((n_steps, dims))


@dataclass(frozen=True)
class PathRecord:
    """One simulated path.  ``v[k]`` and ``dW[k]`` apply on ``[t_k, t_{k+1})``."""

    model: str
    seed: int
    t: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    extra: np.ndarray | None = field(repr=False)
    X: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)
    dW: np.ndarray = field(repr=False)
    clamped_steps: int = 0

    @property
    def cost(self) -> float:
        return float(self.Y[-1])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "S", "extra", "X", "v", "Y"])
            n = len(self.t)
            for k in range(n):
                extra = "" if self.extra is None else f"{self.extra[k]:.17g}"
                v = f"{self.v[k]:.17g}" if k < n - 1 else ""
                w.writerow([f"{self.t[k]:.17g}", f"{self.S[k]:.17g}", extra,
                            f"{self.X[k]:.17g}", v, f"{self.Y[k]:.17g}"])


@dataclass
class PathBatch:
    """Per-path terminal statistics of a batch (full paths optional)."""

    seeds: np.ndarray
    cost: np.ndarray
    impact_cost: np.ndarray
    noise_cost: np.ndarray
    X_final: np.ndarray
    X_min: np.ndarray
    clamped_steps: np.ndarray
    paths: list[PathRecord] | None = None


@dataclass(frozen=True)
class SimSummary:
    n_paths: int
    mean_cost: float
    var_cost: float
    objective: float
    std_error_mean: float
    mu: float

    def as_dict(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "mean_cost": self.mean_cost,
            "var_cost": self.var_cost,
            "objective": self.objective,
            "std_error_mean": self.std_error_mean,
        }


def _sim_grid(params: ModelParams, rule: StrategyRule, n_steps: int | None) -> TimeGrid:
    base = rule.grid
    if abs(base.t_end - params.horizon.t_end) > 1e-12 * base.t_end:
        raise ValueError("rule and params have different horizons")
    if n_steps is None:
        n_steps = base.n_steps
    if n_steps < 10:
        raise ValueError("simulation needs at least 10 steps")
    if n_steps % base.n_steps:
        raise ValueError(
            f"simulation grid ({n_steps} steps) must refine the coefficient grid ({base.n_steps} steps)")
    return TimeGrid(base.t_end, n_steps, base.t_start)


class _Schedule:
    """Per-step deterministic quantities shared by every path in a batch."""

    def __init__(self, params: ModelParams, rule: StrategyRule, grid: TimeGrid):
        self.params = params
        self.grid = grid
        self.t = grid.times
        tk = self.t[:-1]
        self.dt = grid.dt
        self.sqdt = math.sqrt(grid.dt)
        self.a, self.b, self.c = rule.gains(tk)
        self.eta = np.broadcast_to(params.eta(tk), tk.shape)
        self.tau = params.horizon.t_end - tk
        m = params.model
        if m == "basic":
            self.sig = np.broadcast_to(params.sigma(tk), tk.shape)
        elif m == "signal":
            self.theta = np.broadcast_to(params.theta(tk), tk.shape)
            self.s1 = np.broadcast_to(params.sigma1(tk), tk.shape)
            self.s2 = np.broadcast_to(params.sigma2(tk), tk.shape)
        else:
            self.ax = np.broadcast_to(params.a_xi(tk), tk.shape)
            self.bx = np.broadcast_to(params.b_xi(tk), tk.shape)
            x0 = params.x0
            self.sgn = -1.0 if x0 < 0 else 1.0
            self.floor = 0.01 * abs(x0) if x0 != 0 else 1e-12


def stochvol_sigma(xi, X, tau, sgn, floor):
    """Clamped ``sqrt(xi (T-t) / X)``; returns ``(sigma, clamped_mask)``."""
    xe = X * sgn
    clamped = (xi < 0) | (xe < floor)
    var = np.maximum(xi, 0.0) * tau / np.maximum(xe, floor)
    return np.sqrt(var), clamped


def _advance(sch: _Schedule, state: dict, Z: np.ndarray, k_start: int, k_stop: int, record: bool):
    """Step every path from ``k_start`` to ``k_stop``; mutates ``state``.

    ``Z[:, j]`` drives step ``k_start + j``.  Returns per-step histories when
    ``record`` is set.
    """
    model = sch.params.model
    N = sch.grid.n_steps
    dt, sqdt = sch.dt, sch.sqdt
    S, A, X, Y = state["S"], state["A"], state["X"], state["Y"]
    impact, noise, xmin, nclamp = state["impact"], state["noise"], state["xmin"], state["clamped"]
    hist = {"S": [], "A": [], "X": [], "Y": [], "v": [], "dW": []} if record else None
    for k in range(k_start, k_stop):
        z = Z[:, k - k_start]
        if record:
            for name, arr in (("S", S), ("A", A), ("X", X), ("Y", Y)):
                hist[name].append(arr.copy())
        if k == N - 1:
            v = X / dt
        elif model == "signal":
            v = sch.a[k] * X + sch.b[k] * (S - A) + sch.c[k]
        elif model == "stochvol":
            v = sch.a[k] * X + sch.b[k] * A + sch.c[k]
        else:
            v = sch.a[k] * X
        dW = sqdt * z[:, 0]
        imp = sch.eta[k] * v * v * dt
        if model == "basic":
            sig = sch.sig[k]
            nz = sig * X * dW
            Y = Y + imp + nz
            S = S + sig * dW
        elif model == "signal":
            drift = sch.theta[k] * X * (A - S) * dt
            nz = sch.s1[k] * X * dW
            Y = Y + imp + drift + nz
            S, A = S + sch.theta[k] * (A - S) * dt + sch.s1[k] * dW, A + sch.s2[k] * (sqdt * z[:, 1])
        else:
            sig, cl = stochvol_sigma(A, X, sch.tau[k], sch.sgn, sch.floor)
            nclamp = nclamp + cl
            nz = sig * X * dW
            Y = Y + imp + nz
            S = S + sig * dW
            A = A + sch.ax[k] * dt + sch.bx[k] * (sqdt * z[:, 1])
        impact = impact + imp
        noise = noise + nz
        X = np.zeros_like(X) if k == N - 1 else X - v * dt
        xmin = np.minimum(xmin, X)
        if record:
            hist["v"].append(v)
            hist["dW"].append(dW)
    state.update(S=S, A=A, X=X, Y=Y, impact=impact, noise=noise, xmin=xmin, clamped=nclamp)
    if record:
        for name, arr in (("S", S), ("A", A), ("X", X), ("Y", Y)):
            hist[name].append(arr.copy())
    return hist


def _initial_state(params: ModelParams, n: int) -> dict:
    if params.model == "signal":
        a0 = params.alpha0
    elif params.model == "stochvol":
        a0 = params.xi0
    else:
        a0 = 0.0
    return {
        "S": np.full(n, float(params.s0)),
        "A": np.full(n, float(a0)),
        "X": np.full(n, float(params.x0)),
        "Y": np.zeros(n),
        "impact": np.zeros(n),
        "noise": np.zeros(n),
        "xmin": np.full(n, float(params.x0)),
        "clamped": np.zeros(n, dtype=np.int64),
    }


def _check_finite(state: dict, seeds):
    bad = ~(np.isfinite(state["Y"]) & np.isfinite(state["S"]) & np.isfinite(state["A"]))
    if np.any(bad):
        raise FloatingPointError(f"non-finite state on path with seed {int(np.asarray(seeds)[bad][0])}")


def simulate_batch(params: ModelParams, rule: StrategyRule, seeds, n_steps: int | None = None,
                   keep_paths: bool = False) -> PathBatch:
    """Simulate one path per seed; identical to calling :func:`simulate_path` per seed."""
    if params.model != rule.model:
        raise ValueError(f"{params.model} params with a {rule.model} rule")
    grid = _sim_grid(params, rule, n_steps)
    sch = _Schedule(params, rule, grid)
    seeds = np.asarray(list(seeds), dtype=object)
    dims = NOISE_DIMS[params.model]
    N = grid.n_steps
    parts, paths = [], [] if keep_paths else None
    for lo in range(0, len(seeds), CHUNK):
        chunk = seeds[lo:lo + CHUNK]
        Z = np.stack([normals(s, 0, N, dims) for s in chunk])
        state = _initial_state(params, len(chunk))
        hist = _advance(sch, state, Z, 0, N, keep_paths)
        _check_finite(state, chunk)
        parts.append(state)
        if keep_paths:
            stacked = {k: np.stack(v, axis=1) for k, v in hist.items()}
            for i, s in enumerate(chunk):
                paths.append(PathRecord(
                    model=params.model, seed=int(s), t=sch.t.copy(), S=stacked["S"][i],
                    extra=None if params.model == "basic" else stacked["A"][i],
                    X=stacked["X"][i], v=stacked["v"][i], Y=stacked["Y"][i], dW=stacked["dW"][i],
                    clamped_steps=int(state["clamped"][i]),
                ))
    cat = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
    nclamp = int(cat["clamped"].sum())
    if nclamp:
        log.info("stochvol volatility clamp active on %d path-steps", nclamp)
    return PathBatch(
        seeds=np.array([int(s) for s in seeds], dtype=object),
        cost=cat["Y"], impact_cost=cat["impact"], noise_cost=cat["noise"],
        X_final=cat["X"], X_min=cat["xmin"], clamped_steps=cat["clamped"], paths=paths,
    )


def simulate_path(params: ModelParams, rule: StrategyRule, seed: int, n_steps: int | None = None) -> PathRecord:
    return simulate_batch(params, rule, [seed], n_steps, keep_paths=True).paths[0]


def deterministic_path(params: ModelParams, rule: StrategyRule, n_steps: int | None = None) -> PathRecord:
    """Path with every noise increment set to zero (the equilibrium trajectory when noise-free)."""
    grid = _sim_grid(params, rule, n_steps)
    sch = _Schedule(params, rule, grid)
    state = _initial_state(params, 1)
    Z = np.zeros((1, grid.n_steps, NOISE_DIMS[params.model]))
    h = {k: np.stack(v, axis=1)[0] for k, v in _advance(sch, state, Z, 0, grid.n_steps, True).items()}
    return PathRecord(params.model, -1, sch.t.copy(), h["S"], None if params.model == "basic" else h["A"],
                      h["X"], h["v"], h["Y"], h["dW"])


def _fsum_stats(x: np.ndarray) -> tuple[float, float]:
    """Order-independent mean and unbiased variance."""
    n = len(x)
    mean = math.fsum(x.tolist()) / n
    var = math.fsum(((x - mean) ** 2).tolist()) / (n - 1)
    return mean, var


def summarize(costs: np.ndarray, mu: float) -> SimSummary:
    n = len(costs)
    if n < 2:
        raise ValueError("need at least two paths")
    mean, var = _fsum_stats(np.asarray(costs, dtype=float))
    return SimSummary(n, mean, var, mean + mu * var, math.sqrt(var / n), mu)


def estimate_mean_variance(params: ModelParams, rule: StrategyRule, n_paths: int, base_seed: int,
                           n_steps: int | None = None) -> SimSummary:
    """Mean, variance and ``mean + mu var`` of the terminal cost over seeded paths."""
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    batch = simulate_batch(params, rule, range(base_seed, base_seed + n_paths), n_steps)
    return summarize(batch.cost, params.mu)


def replay_cost(record: PathRecord, params: ModelParams) -> float:
    """Recompute the terminal cost from the stored arrays."""
    t = record.t[:-1]
    dt = record.t[1] - record.t[0]
    eta = np.broadcast_to(params.eta(t), t.shape)
    X = record.X[:-1]
    terms = eta * record.v ** 2 * dt
    if params.model == "basic":
        sig = np.broadcast_to(params.sigma(t), t.shape)
    elif params.model == "signal":
        theta = np.broadcast_to(params.theta(t), t.shape)
        terms = terms + theta * X * (record.extra[:-1] - record.S[:-1]) * dt
        sig = np.broadcast_to(params.sigma1(t), t.shape)
    else:
        x0 = params.x0
        sig, _ = stochvol_sigma(record.extra[:-1], X, params.horizon.t_end - t,
                                -1.0 if x0 < 0 else 1.0, 0.01 * abs(x0) if x0 != 0 else 1e-12)
    terms = terms + sig * X * record.dW
    return math.fsum(terms.tolist())


@dataclass(frozen=True)
class VarianceDecomposition:
    """Nested-simulation estimate of ``Var0 = E[Var_tau] + Var[E_tau]``."""

    split_time: float
    n_outer: int
    n_inner: int
    var_total: float
    mean_of_inner_var: float
    var_of_inner_mean: float

    @property
    def gap(self) -> float:
        resid = abs(self.var_total - self.mean_of_inner_var - self.var_of_inner_mean)
        if self.var_total == 0:
            return 0.0 if resid == 0 else math.inf
        return resid / self.var_total

    def as_dict(self) -> dict:
        return {
            "split_time": self.split_time, "n_outer": self.n_outer, "n_inner": self.n_inner,
            "var_total": self.var_total, "mean_of_inner_var": self.mean_of_inner_var,
            "var_of_inner_mean": self.var_of_inner_mean, "gap": self.gap,
        }


def total_variance_check(params: ModelParams, rule: StrategyRule, split_time: float, n_outer: int,
                         n_inner: int, base_seed: int, n_steps: int | None = None) -> VarianceDecomposition:
    """Law-of-total-variance check by nested simulation.

    Outer path ``i`` runs to the split time on stream 0 of seed
    ``base_seed + i``; its ``n_inner`` continuations use streams ``1..n_inner``
    of the same seed.  The between-path variance is corrected for the inner
    sampling noise (``- mean(inner var) / n_inner``).
    """
    T = params.horizon.t_end
    if not 0 < split_time < T:
        raise ValueError("split time must lie strictly inside (0, T)")
    if n_outer < 2 or n_inner < 2:
        raise ValueError("need at least two outer and two inner paths")
    grid = _sim_grid(params, rule, n_steps)
    sch = _Schedule(params, rule, grid)
    N = grid.n_steps
    k_split = int(round(split_time / grid.dt))
    k_split = min(max(k_split, 1), N - 1)
    dims = NOISE_DIMS[params.model]

    seeds = list(range(base_seed, base_seed + n_outer))
    outer = _initial_state(params, n_outer)
    Z = np.stack([normals(s, 0, k_split, dims) for s in seeds])
    _advance(sch, outer, Z, 0, k_split, False)

    per_block = max(1, (16 * CHUNK) // n_inner)
    costs = np.empty((n_outer, n_inner))
    for lo in range(0, n_outer, per_block):
        idx = range(lo, min(lo + per_block, n_outer))
        state = {k: np.repeat(v[list(idx)], n_inner) for k, v in outer.items()}
        Zi = np.stack([normals(seeds[i], j + 1, N - k_split, dims) for i in idx for j in range(n_inner)])
        _advance(sch, state, Zi, k_split, N, False)
        _check_finite(state, [seeds[i] for i in idx for _ in range(n_inner)])
        costs[lo:lo + len(idx)] = state["Y"].reshape(len(idx), n_inner)

    _, var_total = _fsum_stats(costs.ravel())
    inner_means = np.array([_fsum_stats(row)[0] for row in costs])
    inner_vars = np.array([_fsum_stats(row)[1] for row in costs])
    mean_inner_var = math.fsum(inner_vars.tolist()) / n_outer
    _, var_means = _fsum_stats(inner_means)
    return VarianceDecomposition(float(sch.t[k_split]), n_outer, n_inner, var_total, mean_inner_var,
                                 var_means - mean_inner_var / n_inner)
