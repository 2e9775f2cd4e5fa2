"""Backward integration of the value-function coefficient ODEs.

All three models lead to Riccati-type systems whose leading coefficients blow
up like ``eta / (T - t)`` at the horizon (forced linear liquidation).  The
solvers work in time-to-go ``tau = T - t`` and carry the singular coefficients
(``L``/``D`` and the ``f``-coefficient ``Lf``) as reciprocals, which are smooth
and vanish at ``tau = 0``:

    d = 1/D:    d' = 1/eta - d^2 * (source of D)
    l = 1/Lf:   l' = r (2 - r) / eta,   r = l/d

Integration runs in two legs:

1. a terminal layer on ``[tau0, eps]`` with geometrically growing RK4 steps,
   started from the leading-order asymptotics at ``tau0 = eps * 1e-6``;
2. fixed-step classical RK4 on the uniform time grid from ``T - eps`` to 0.

Coefficients are stored on the grid points ``t <= T - eps`` only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, ClassVar, Sequence

import numpy as np

from .params import BasicModelParams, ModelParams, SignalModelParams, StochVolModelParams, TimeGrid

__all__ = [
    "SolverError",
    "CoefficientTable",
    "BasicCoefficientTable",
    "SignalCoefficientTable",
    "StochVolCoefficientTable",
    "default_cutoff",
    "solve_basic",
    "solve_signal",
    "solve_stochvol",
    "solve",
    "ConvergenceReport",
    "refine_convergence",
    "read_table_csv",
]

LAYER_START = 1e-6
LAYER_STEPS = 700


class SolverError(RuntimeError):
    """Raised when a coefficient integration produces non-finite values."""


def default_cutoff(grid: TimeGrid) -> float:
    return max(1e-3 * grid.horizon, 2.0 * grid.dt)


def _cutoff_steps(grid: TimeGrid, cutoff: float | None) -> int:
    if cutoff is None:
        cutoff = default_cutoff(grid)
    if not cutoff > 0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    m = round(cutoff / grid.dt)
    if m < 2 or cutoff < 2.0 * grid.dt * (1 - 1e-9):
        raise ValueError(f"cutoff {cutoff} shorter than two grid steps (dt={grid.dt})")
    if m >= grid.n_steps:
        raise ValueError(f"cutoff {cutoff} leaves no grid points before T")
    return m


@dataclass(frozen=True)
class CoefficientTable:
    """Coefficients sampled at grid points ``t_0 .. T - cutoff``."""

    model: ClassVar[str] = ""
    COLUMNS: ClassVar[tuple[str, ...]] = ()

    grid: TimeGrid
    cutoff: float
    t: np.ndarray = field(repr=False)

    def column(self, name: str) -> np.ndarray:
        if name not in self.COLUMNS:
            raise KeyError(name)
        return getattr(self, name)

    def __iter__(self):
        return iter(self.COLUMNS)

    @property
    def t_cut(self) -> float:
        return float(self.t[-1])

    def at(self, name: str, t: float) -> float:
        """Linear interpolation of a column; ``t`` must lie in ``[0, T - cutoff]``."""
        return float(np.interp(t, self.t, self.column(name)))

    def to_rows(self) -> list[list[float]]:
        cols = [self.t] + [self.column(c) for c in self.COLUMNS]
        return [list(r) for r in zip(*cols)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t",) + self.COLUMNS)
            for row in self.to_rows():
                w.writerow([f"{v:.17g}" for v in row])


@dataclass(frozen=True)
class BasicCoefficientTable(CoefficientTable):
    """``C = x^2 L(t)``, ``f = x^2 Lf(t)``."""

    model: ClassVar[str] = "basic"
    COLUMNS: ClassVar[tuple[str, ...]] = ("L", "Lf")

    L: np.ndarray = field(default=None, repr=False)
    Lf: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class SignalCoefficientTable(CoefficientTable):
    """Quadratic coefficients in ``(x, beta)``; ``G = O = P = 0`` are not stored."""

    model: ClassVar[str] = "signal"
    COLUMNS: ClassVar[tuple[str, ...]] = ("D", "E", "F", "H", "I", "Lf", "M", "N", "Q")

    D: np.ndarray = field(default=None, repr=False)
    E: np.ndarray = field(default=None, repr=False)
    F: np.ndarray = field(default=None, repr=False)
    H: np.ndarray = field(default=None, repr=False)
    I: np.ndarray = field(default=None, repr=False)  # noqa: E741
    Lf: np.ndarray = field(default=None, repr=False)
    M: np.ndarray = field(default=None, repr=False)
    N: np.ndarray = field(default=None, repr=False)
    Q: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class StochVolCoefficientTable(CoefficientTable):
    """Quadratic coefficients in ``(x, xi)``."""

    model: ClassVar[str] = "stochvol"
    COLUMNS: ClassVar[tuple[str, ...]] = ("D", "E", "F", "G", "H", "I", "Lf", "M", "N", "O", "P", "Q")

    D: np.ndarray = field(default=None, repr=False)
    E: np.ndarray = field(default=None, repr=False)
    F: np.ndarray = field(default=None, repr=False)
    G: np.ndarray = field(default=None, repr=False)
    H: np.ndarray = field(default=None, repr=False)
    I: np.ndarray = field(default=None, repr=False)  # noqa: E741
    Lf: np.ndarray = field(default=None, repr=False)
    M: np.ndarray = field(default=None, repr=False)
    N: np.ndarray = field(default=None, repr=False)
    O: np.ndarray = field(default=None, repr=False)  # noqa: E741
    P: np.ndarray = field(default=None, repr=False)
    Q: np.ndarray = field(default=None, repr=False)


TABLE_TYPES = {c.model: c for c in (BasicCoefficientTable, SignalCoefficientTable, StochVolCoefficientTable)}


# ---------------------------------------------------------------------------
# right-hand sides in tau = T - t; each returns dy/dtau
# parameter tuples are evaluated at t = T - tau by the caller
# ---------------------------------------------------------------------------

def _rhs_basic(tau, y, p):
    w, k = y
    eta, src = p  # src = mu sigma^2
    ie = 1.0 / eta
    r = k / w
    return (ie - w * w * src, r * (2.0 - r) * ie)


def _rhs_signal(tau, y, p):
    d, F, l, M, N, E, H, I, Q = y
    eta, theta, mu_s1, mu_s2, s12 = p
    ie = 1.0 / eta
    D = 1.0 / d
    Lf = 1.0 / l
    r = l / d
    n1 = 1.0 + N
    dd = ie - d * d * (mu_s1 * n1 * n1 + mu_s2 * N * N)
    dF = -theta - theta * F - D * F * ie + 4.0 * mu_s1 * n1 * M + 4.0 * mu_s2 * M * N
    dl = r * (2.0 - r) * ie
    dM = 0.25 * ie * F * F - 2.0 * theta * M - 0.5 * ie * F * N
    dN = -theta + D * F * ie - theta * N - (D * N + F * Lf) * ie
    dE = -2.0 * theta * E - 0.25 * ie * F * F + 4.0 * (mu_s1 + mu_s2) * M * M
    dH = -theta * H
    dI = s12 * E
    # sign of the M term follows from substituting the ansatz into the f-equation
    dQ = s12 * M
    return (dd, dF, dl, dM, dN, dE, dH, dI, dQ)


def _rhs_stochvol(tau, y, p):
    d, E, F, G, H, I, l, M, N, O, P, Q = y
    eta, a, b2, mu = p
    ie = 1.0 / eta
    D = 1.0 / d
    Lf = 1.0 / l
    r = l / d
    mb2 = mu * b2
    dd = ie - d * d * (mb2 * N * N)
    dE = -0.25 * ie * F * F + 4.0 * mb2 * M * M
    dF = -D * F * ie + 4.0 * mb2 * M * N + mu * tau
    dG = -D * G * ie + 2.0 * mb2 * N * P + a * F
    dH = -0.5 * ie * F * G + 4.0 * mb2 * M * P + 2.0 * a * E
    dI = b2 * E - 0.25 * ie * G * G + mb2 * P * P + a * H
    dl = r * (2.0 - r) * ie
    dM = 0.25 * ie * F * F - 0.5 * ie * F * N
    dN = D * F * ie - (D * N + F * Lf) * ie
    dO = (D * G - D * O - G * Lf) * ie + a * N
    dP = 0.5 * ie * (F * G - F * O - G * N) + 2.0 * a * M
    dQ = 0.25 * ie * G * G - 0.5 * ie * G * O + a * P + b2 * M
    return (dd, dE, dF, dG, dH, dI, dl, dM, dN, dO, dP, dQ)


@dataclass(frozen=True)
class _System:
    rhs: Callable
    state: tuple[str, ...]          # names of the integrated variables
    reciprocal: dict[str, str]      # stored column -> reciprocal state variable
    table: type
    params_at: Callable             # t array -> list of parameter tuples


def _rows(*cols) -> list[list[float]]:
    return np.column_stack(cols).tolist()


def _basic_system(params: BasicModelParams) -> _System:
    def params_at(t):
        shape = np.shape(t)
        eta = np.broadcast_to(params.eta(t), shape)
        sig = np.broadcast_to(params.sigma(t), shape)
        return _rows(eta, params.mu * sig * sig)

    return _System(_rhs_basic, ("w", "k"), {"L": "w", "Lf": "k"}, BasicCoefficientTable, params_at)


def _signal_system(params: SignalModelParams) -> _System:
    def params_at(t):
        shape = np.shape(t)
        eta = np.broadcast_to(params.eta(t), shape)
        theta = np.broadcast_to(params.theta(t), shape)
        s1 = np.broadcast_to(params.sigma1(t), shape) ** 2
        s2 = np.broadcast_to(params.sigma2(t), shape) ** 2
        return _rows(eta, theta, params.mu * s1, params.mu * s2, s1 + s2)

    return _System(
        _rhs_signal,
        ("d", "F", "l", "M", "N", "E", "H", "I", "Q"),
        {"D": "d", "Lf": "l"},
        SignalCoefficientTable,
        params_at,
    )


def _stochvol_system(params: StochVolModelParams) -> _System:
    def params_at(t):
        shape = np.shape(t)
        eta = np.broadcast_to(params.eta(t), shape)
        a = np.broadcast_to(params.a_xi(t), shape)
        b2 = np.broadcast_to(params.b_xi(t), shape) ** 2
        return _rows(eta, a, b2, np.full(shape, params.mu))

    return _System(
        _rhs_stochvol,
        ("d", "E", "F", "G", "H", "I", "l", "M", "N", "O", "P", "Q"),
        {"D": "d", "Lf": "l"},
        StochVolCoefficientTable,
        params_at,
    )


def _rk4_step(rhs, tau, h, y, p0, pm, p1):
    k1 = rhs(tau, y, p0)
    hh = 0.5 * h
    k2 = rhs(tau + hh, [a + hh * b for a, b in zip(y, k1)], pm)
    k3 = rhs(tau + hh, [a + hh * b for a, b in zip(y, k2)], pm)
    k4 = rhs(tau + h, [a + h * b for a, b in zip(y, k3)], p1)
    h6 = h / 6.0
    return [a + h6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]


def _integrate(rhs, y, taus, p_nodes, p_mids, T):
    """RK4 through the increasing ``taus``; returns the state at every node."""
    out = [y]
    for j in range(len(taus) - 1):
        tau = taus[j]
        h = taus[j + 1] - tau
        y = _rk4_step(rhs, tau, h, y, p_nodes[j], p_mids[j], p_nodes[j + 1])
        if not all(map(math.isfinite, y)):
            raise SolverError(f"non-finite coefficient at t={T - taus[j + 1]:.10g}")
        out.append(y)
    return out


def _solve(system: _System, params: ModelParams, cutoff: float | None) -> CoefficientTable:
    grid = params.horizon
    T = grid.t_end
    m = _cutoff_steps(grid, cutoff)
    t_grid = grid.times
    t_store = t_grid[: grid.n_steps - m + 1]
    eps = T - t_store[-1]

    # terminal layer: geometric steps from tau0 to eps
    layer_taus = eps * np.geomspace(LAYER_START, 1.0, LAYER_STEPS + 1)
    layer_taus[-1] = eps
    layer_mids = 0.5 * (layer_taus[:-1] + layer_taus[1:])
    tau0 = layer_taus[0]
    eta0 = float(params.eta(T - tau0))
    y0 = [tau0 / eta0 if name in system.reciprocal.values() else 0.0 for name in system.state]
    layer = _integrate(system.rhs, y0, layer_taus,
                       system.params_at(T - layer_taus), system.params_at(T - layer_mids), T)

    # grid leg: tau runs over T - t_store reversed
    taus = (T - t_store)[::-1]
    mids = 0.5 * (taus[:-1] + taus[1:])
    states = _integrate(system.rhs, layer[-1], taus,
                        system.params_at(T - taus), system.params_at(T - mids), T)

    arr = np.array(states[::-1])
    cols = {}
    index = {name: i for i, name in enumerate(system.state)}
    for name in system.table.COLUMNS:
        if name in system.reciprocal:
            cols[name] = 1.0 / arr[:, index[system.reciprocal[name]]]
        else:
            cols[name] = arr[:, index[name]].copy()
    for v in cols.values():
        v.setflags(write=False)
    t_store = t_store.copy()
    t_store.setflags(write=False)
    return system.table(grid=grid, cutoff=eps, t=t_store, **cols)


def solve_basic(params: BasicModelParams, cutoff: float | None = None) -> BasicCoefficientTable:
    """Solve ``-L' = mu sigma^2 - L^2/eta`` with ``L ~ eta/(T-t)``, plus the f-coefficient."""
    return _solve(_basic_system(params), params, cutoff)


def solve_signal(params: SignalModelParams, cutoff: float | None = None) -> SignalCoefficientTable:
    return _solve(_signal_system(params), params, cutoff)


def solve_stochvol(params: StochVolModelParams, cutoff: float | None = None) -> StochVolCoefficientTable:
    return _solve(_stochvol_system(params), params, cutoff)


_SOLVERS = {"basic": solve_basic, "signal": solve_signal, "stochvol": solve_stochvol}


def solve(params: ModelParams, cutoff: float | None = None) -> CoefficientTable:
    return _SOLVERS[params.model](params, cutoff)


def read_table_csv(path, model: str, grid: TimeGrid, cutoff: float) -> CoefficientTable:
    """Load a table written by :meth:`CoefficientTable.write_csv`."""
    cls = TABLE_TYPES[model]
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = tuple(rows[0])
    if header != ("t",) + cls.COLUMNS:
        raise ValueError(f"unexpected header {header} for model {model}")
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    cols = {name: data[:, i + 1] for i, name in enumerate(cls.COLUMNS)}
    return cls(grid=grid, cutoff=cutoff, t=data[:, 0], **cols)


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    """Max-norm differences between solutions at n, 2n and 4n steps.

    ``order[c]`` is ``log2(diff_coarse / diff_fine)`` or ``None`` when the
    fine difference is at rounding level (nothing left to converge).
    """

    n_steps: tuple[int, int, int]
    cutoff: float
    diff_coarse: dict[str, float]
    diff_fine: dict[str, float]
    order: dict[str, float | None]

    @property
    def observed_orders(self) -> dict[str, float]:
        return {k: v for k, v in self.order.items() if v is not None}


def refine_convergence(params: ModelParams, cutoff: float, n_steps: int) -> ConvergenceReport:
    if n_steps < 4:
        raise ValueError("n_steps must be >= 4")
    tables = []
    for factor in (1, 2, 4):
        p = replace(params, horizon=TimeGrid(params.horizon.t_end, n_steps * factor, params.horizon.t_start))
        tables.append(solve(p, cutoff))
    coarse, mid, fine = tables
    diff_c, diff_f, order = {}, {}, {}
    for name in coarse.COLUMNS:
        a = coarse.column(name)
        b = mid.column(name)[::2]
        c = fine.column(name)[::4]
        e1 = float(np.max(np.abs(a - b)))
        e2 = float(np.max(np.abs(b - c)))
        scale = float(np.max(np.abs(c)))
        diff_c[name], diff_f[name] = e1, e2
        floor = 1e-13 * max(scale, 1e-300)
        order[name] = math.log2(e1 / e2) if e2 > floor and e1 > floor else None
    return ConvergenceReport((n_steps, 2 * n_steps, 4 * n_steps), coarse.cutoff, diff_c, diff_f, order)
