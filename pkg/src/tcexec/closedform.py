"""Constant-parameter closed forms for the basic model.

With constant volatility and impact the value coefficient is

    L(t) = sqrt(mu eta sigma^2) coth(kappa (T - t)),   kappa = sqrt(mu sigma^2 / eta)

and the feedback rate is ``X kappa coth(kappa (T - t))``.  These serve as exact
oracles for the numerical solvers.
"""

from __future__ import annotations

import math

__all__ = ["coth", "ucoth", "basic_L_closed", "basic_rate_closed", "basic_trajectory_closed"]

_LARGE = 20.0
_SMALL = 1e-8


def coth(u: float) -> float:
    """Hyperbolic cotangent for ``u > 0`` without overflow or cancellation."""
    if u <= 0:
        raise ValueError(f"coth argument must be positive, got {u}")
    if u < _SMALL:
        return 1.0 / u + u / 3.0
    if u > _LARGE:
        e = math.exp(-2.0 * u)
        return 1.0 + 2.0 * e / (1.0 - e)
    return 1.0 / math.tanh(u)


def ucoth(u: float) -> float:
    """``u coth(u)`` with the removable singularity at 0 filled in."""
    if u == 0:
        return 1.0
    return u * coth(u)


def _check(t: float, T: float, eta: float, mu: float, sigma: float):
    if not t < T:
        raise ValueError(f"closed form requires t < T, got t={t}, T={T}")
    if eta <= 0:
        raise ValueError("eta must be positive")
    if mu * sigma * sigma < 0:
        raise ValueError("mu sigma^2 must be nonnegative")


def basic_L_closed(t: float, mu: float, sigma: float, eta: float, T: float) -> float:
    _check(t, T, eta, mu, sigma)
    tau = T - t
    kappa = math.sqrt(mu * sigma * sigma / eta)
    # eta/tau * (u coth u) is the same quantity and stays finite as kappa -> 0
    return eta / tau * ucoth(kappa * tau)


def basic_rate_closed(t: float, X: float, mu: float, sigma: float, eta: float, T: float) -> float:
    return X * basic_L_closed(t, mu, sigma, eta, T) / eta


def basic_trajectory_closed(t, x0: float, mu: float, sigma: float, eta: float, T: float):
    """Holdings ``x0 sinh(kappa (T-t)) / sinh(kappa T)`` under the closed-form rate.

    Accepts scalar or array ``t``; falls back to the linear profile when
    ``mu sigma^2 = 0``.
    """
    import numpy as np

    kappa = math.sqrt(mu * sigma * sigma / eta)
    tau = T - np.asarray(t, dtype=float)
    if kappa == 0:
        return x0 * tau / T
    # ratio of sinh written with decaying exponentials, safe for large kappa*T
    num = np.exp(-kappa * (T - tau)) * -np.expm1(-2.0 * kappa * tau)
    den = -math.expm1(-2.0 * kappa * T)
    return x0 * num / den
