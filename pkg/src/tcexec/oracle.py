"""Independent checks on the solvers.

* A discrete-time oracle for the basic model: the deterministic problem
  ``min sum (eta v^2 + mu sigma^2 X^2) dt`` with fixed end points is a
  symmetric positive-definite tridiagonal system, solved exactly.
* Residuals of the value-function PDEs after substituting the quadratic ansatz
  with the solved coefficient tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from .coeffs import CoefficientTable
from .params import BasicModelParams, ModelParams, ParamCurve, TimeGrid

__all__ = [
    "DiscreteTrajectory",
    "linear_trajectory",
    "deterministic_objective",
    "discrete_equilibrium_basic",
    "perturbation_optimality_check",
    "ResidualReport",
    "hjb_residual_report",
    "centered_derivative",
]


@dataclass(frozen=True)
class DiscreteTrajectory:
    t: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        if len(self.t) != len(self.X) or len(self.t) < 2:
            raise ValueError("times and holdings must have equal length >= 2")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.t))):
            raise ValueError("trajectory must be finite")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def v(self) -> np.ndarray:
        return (self.X[:-1] - self.X[1:]) / self.dt

    @property
    def N(self) -> int:
        return len(self.t) - 1


def linear_trajectory(x0: float, T: float, N: int) -> DiscreteTrajectory:
    grid = TimeGrid(T, N)
    t = grid.times
    X = x0 * (N - np.arange(N + 1)) / N
    return DiscreteTrajectory(t, X)


def _objective_terms(traj: DiscreteTrajectory, mu: float, sigma: ParamCurve, eta: ParamCurve) -> np.ndarray:
    tk = traj.t[:-1]
    s = np.broadcast_to(sigma(tk), tk.shape)
    e = np.broadcast_to(eta(tk), tk.shape)
    return (e * traj.v ** 2 + mu * s * s * traj.X[:-1] ** 2) * traj.dt


def deterministic_objective(traj: DiscreteTrajectory, mu: float, sigma: ParamCurve, eta: ParamCurve) -> float:
    """``sum_k [eta(t_k) v_k^2 + mu sigma(t_k)^2 X_k^2] dt``."""
    return math.fsum(_objective_terms(traj, mu, sigma, eta).tolist())


def discrete_equilibrium_basic(params: BasicModelParams, N: int) -> DiscreteTrajectory:
    """Exact minimiser of :func:`deterministic_objective` with ``X_0 = x0``, ``X_N = 0``.

    Stationarity in the interior holdings gives, for ``k = 1..N-1``,

        -eta_{k-1} X_{k-1} + (eta_{k-1} + eta_k + mu sigma_k^2 dt^2) X_k - eta_k X_{k+1} = 0

    (after multiplying through by ``dt``).
    """
    if N < 3:
        raise ValueError("need N >= 3")
    T = params.horizon.t_end
    grid = TimeGrid(T, N)
    t = grid.times
    dt = grid.dt
    tk = t[:-1]
    eta = np.broadcast_to(params.eta(tk), tk.shape).astype(float)
    sig = np.broadcast_to(params.sigma(tk), tk.shape).astype(float)
    n = N - 1
    ab = np.zeros((2, n))
    ab[1] = eta[:-1] + eta[1:] + params.mu * sig[1:] ** 2 * dt * dt
    ab[0, 1:] = -eta[1:-1]
    rhs = np.zeros(n)
    rhs[0] = eta[0] * params.x0
    # eta > 0 makes the matrix positive definite; solveh_banded raises otherwise
    interior = solveh_banded(ab, rhs)
    X = np.concatenate(([params.x0], interior, [0.0]))
    return DiscreteTrajectory(t, X)


def perturbation_optimality_check(params: BasicModelParams, traj: DiscreteTrajectory, k: int, delta: float) -> float:
    """Change in the objective when ``X_k`` moves by ``delta`` (neighbouring rates adjust).

    Only the three affected terms are differenced, in expanded form, so the
    result carries no cancellation error from the rest of the sum.
    """
    if not 1 <= k <= traj.N - 1:
        raise IndexError(f"k must lie in [1, {traj.N - 1}], got {k}")
    dt = traj.dt
    t_prev, t_k = traj.t[k - 1], traj.t[k]
    eta_prev, eta_k = float(params.eta(t_prev)), float(params.eta(t_k))
    sig_k = float(params.sigma(t_k))
    v = traj.v
    d_prev = eta_prev * (2.0 * v[k - 1] * delta + delta * delta / dt)
    d_next = eta_k * (-2.0 * v[k] * delta + delta * delta / dt)
    d_hold = params.mu * sig_k * sig_k * (2.0 * traj.X[k] * delta + delta * delta) * dt
    return float(d_prev + d_next + d_hold)


# ---------------------------------------------------------------------------
# PDE residuals
# ---------------------------------------------------------------------------

def centered_derivative(y: np.ndarray, h: float, k: np.ndarray) -> np.ndarray:
    """Fourth-order five-point centred difference of ``y`` at indices ``k``."""
    return (y[k - 2] - 8.0 * y[k - 1] + 8.0 * y[k + 1] - y[k + 2]) / (12.0 * h)


@dataclass(frozen=True)
class ResidualReport:
    model: str
    sample_count: int
    t_max: float
    max_scaled_C: float
    max_scaled_f: float
    worst: dict

    @property
    def max_scaled(self) -> float:
        return max(self.max_scaled_C, self.max_scaled_f)

    def as_dict(self) -> dict:
        return {"model": self.model, "sample_count": self.sample_count, "t_max": self.t_max,
                "max_scaled_C": self.max_scaled_C, "max_scaled_f": self.max_scaled_f,
                "max_scaled": self.max_scaled, "worst": self.worst}


def _coef(table, name, k, h):
    if name in table.COLUMNS:
        y = table.column(name)
        return y[k], centered_derivative(y, h, k)
    zero = np.zeros(len(k))
    return zero, zero


def hjb_residual_report(model: str, table: CoefficientTable, params: ModelParams, sample_count: int,
                        seed: int, t_max: float | None = None) -> ResidualReport:
    """Largest scaled PDE residual of the quadratic ansatz over random grid samples.

    Times are drawn from grid points ``t <= t_max`` (default ``T - 10 eps``);
    coefficient derivatives use five-point centred differences on the grid.
    Residuals are divided by ``mu sigma1^2 x^2 + |theta x beta| + 1`` (signal)
    or ``mu sigma^2 x^2 + 1`` (basic, stochastic volatility).
    """
    if model != table.model or model != params.model:
        raise ValueError("model, table and params disagree")
    grid = params.horizon
    if table.grid != grid or len(table.t) > grid.n_steps + 1 or np.any(table.t != grid.times[: len(table.t)]):
        raise ValueError("table grid does not match params grid")
    T = grid.t_end
    h = grid.dt
    if t_max is None:
        t_max = T - 10.0 * table.cutoff
    k_hi = min(int(np.searchsorted(table.t, t_max, side="right")) - 1, len(table.t) - 3)
    if k_hi < 2:
        raise ValueError("no grid points available for residual sampling")

    rng = np.random.default_rng(seed)
    k = rng.integers(2, k_hi + 1, size=sample_count)
    xs = max(abs(params.x0), 1.0)
    x = rng.uniform(-xs, xs, size=sample_count)
    z = rng.uniform(-1.0, 1.0, size=sample_count)
    t = table.t[k]
    tau = T - t
    eta = np.broadcast_to(params.eta(t), t.shape)

    if model == "basic":
        L, dL = _coef(table, "L", k, h)
        K, dK = _coef(table, "Lf", k, h)
        sig2 = np.broadcast_to(params.sigma(t), t.shape) ** 2
        Cx, fx = 2 * x * L, 2 * x * K
        Ct, ft = x * x * dL, x * x * dK
        rC = Ct - Cx ** 2 / (4 * eta) + params.mu * sig2 * x * x
        rf = Cx ** 2 / (4 * eta) - Cx * fx / (2 * eta) + ft
        scale = params.mu * sig2 * x * x + 1.0
        zvals = np.zeros_like(x)
    else:
        names_C = ("D", "E", "F", "G", "H", "I")
        names_f = ("Lf", "M", "N", "O", "P", "Q")
        cv = {n: _coef(table, n, k, h) for n in names_C + names_f}
        (D, dD), (E, dE), (F, dF), (G, dG), (H, dH), (I, dI) = (cv[n] for n in names_C)
        (L, dL), (M, dM), (N, dN), (O, dO), (P, dP), (Q, dQ) = (cv[n] for n in names_f)
        if model == "signal":
            zvals = 5.0 * z  # beta in [-5, 5]
        else:
            zvals = params.xi0 + 2.0 * z  # xi in [xi0 - 2, xi0 + 2]
        y = zvals
        Cx = 2 * x * D + y * F + G
        Cy = 2 * y * E + x * F + H
        Cyy = 2 * E
        Ct = x * x * dD + y * y * dE + x * y * dF + x * dG + y * dH + dI
        fx = 2 * x * L + y * N + O
        fy = 2 * y * M + x * N + P
        fyy = 2 * M
        ft = x * x * dL + y * y * dM + x * y * dN + x * dO + y * dP + dQ
        mu = params.mu
        if model == "signal":
            th = np.broadcast_to(params.theta(t), t.shape)
            s1 = np.broadcast_to(params.sigma1(t), t.shape) ** 2
            s2 = np.broadcast_to(params.sigma2(t), t.shape) ** 2
            rC = (-th * x * y - Cy * th * y + 0.5 * Cyy * (s1 + s2) + Ct - Cx ** 2 / (4 * eta)
                  + mu * s1 * (x + fy) ** 2 + mu * s2 * fy ** 2)
            rf = (-th * x * y + Cx ** 2 / (4 * eta) - fy * th * y + 0.5 * fyy * (s1 + s2)
                  - Cx * fx / (2 * eta) + ft)
            scale = mu * s1 * x * x + np.abs(th * x * y) + 1.0
        else:
            a = np.broadcast_to(params.a_xi(t), t.shape)
            b2 = np.broadcast_to(params.b_xi(t), t.shape) ** 2
            # sigma^2 x^2 = xi (T - t) x under the market-state volatility structure
            risk = mu * y * tau * x
            rC = 0.5 * Cyy * b2 + Cy * a + Ct - Cx ** 2 / (4 * eta) + risk + mu * fy ** 2 * b2
            rf = Cx ** 2 / (4 * eta) + 0.5 * fyy * b2 + fy * a - Cx * fx / (2 * eta) + ft
            scale = np.abs(risk) + 1.0

    sC = np.abs(rC) / scale
    sf = np.abs(rf) / scale
    i = int(np.argmax(np.maximum(sC, sf)))
    worst = {"t": float(t[i]), "x": float(x[i]), "z": float(zvals[i]),
             "scaled_C": float(sC[i]), "scaled_f": float(sf[i])}
    return ResidualReport(model, sample_count, float(table.t[k_hi]), float(sC.max()), float(sf.max()), worst)
