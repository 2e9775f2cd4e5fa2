"""Feedback trading-rate rules.

Every rule is affine in the state:

    rate(t, X, z) = a(t) X + b(t) z + c(t)

with ``z = beta = S - alpha`` for the signal model and ``z = xi`` for the
stochastic-volatility model.  Past the coefficient cutoff the rule switches to
linear liquidation ``X / (T - t)``.  Positive rates mean buying.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coeffs import (
    BasicCoefficientTable,
    CoefficientTable,
    SignalCoefficientTable,
    StochVolCoefficientTable,
    solve,
)
from .params import ModelParams, ParamCurve

__all__ = ["StrategyRule", "make_rule", "rate_basic", "rate_signal", "rate_stochvol"]


@dataclass(frozen=True)
class StrategyRule:
    model: str
    table: CoefficientTable
    eta: ParamCurve

    @property
    def T(self) -> float:
        return self.table.grid.t_end

    @property
    def cutoff(self) -> float:
        return self.table.cutoff

    @property
    def grid(self):
        return self.table.grid

    def _check_time(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.table.grid.t_start) or np.any(t >= self.T):
            raise ValueError(f"rate requested outside [0, T) (T={self.T})")

    def gains(self, t):
        """Return ``(a, b, c)`` arrays with ``rate = a X + b z + c`` at times ``t``."""
        self._check_time(t)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tab = self.table
        eta = np.broadcast_to(self.eta(t), t.shape)
        inside = t <= tab.t_cut
        tc = np.minimum(t, tab.t_cut)
        if self.model == "basic":
            a = np.interp(tc, tab.t, tab.L) / eta
            b = np.zeros_like(t)
            c = np.zeros_like(t)
        else:
            a = np.interp(tc, tab.t, tab.D) / eta
            b = np.interp(tc, tab.t, tab.F) / (2.0 * eta)
            if self.model == "stochvol":
                c = np.interp(tc, tab.t, tab.G) / (2.0 * eta)
            else:
                c = np.zeros_like(t)
        tail = ~inside
        a = np.where(tail, 1.0 / (self.T - t), a)
        b = np.where(tail, 0.0, b)
        c = np.where(tail, 0.0, c)
        return a, b, c

    def rate(self, t: float, X, z=0.0):
        a, b, c = self.gains(t)
        out = a[0] * np.asarray(X, dtype=float) + b[0] * np.asarray(z, dtype=float) + c[0]
        return float(out) if np.ndim(out) == 0 else out


def make_rule(params: ModelParams, table: CoefficientTable | None = None, cutoff: float | None = None) -> StrategyRule:
    """Build the feedback rule for ``params``, solving coefficients if needed."""
    if table is None:
        table = solve(params, cutoff)
    expected = {"basic": BasicCoefficientTable, "signal": SignalCoefficientTable,
                "stochvol": StochVolCoefficientTable}[params.model]
    if not isinstance(table, expected):
        raise TypeError(f"{params.model} rule needs a {expected.__name__}")
    return StrategyRule(params.model, table, params.eta)


def _require(rule: StrategyRule, model: str):
    if rule.model != model:
        raise ValueError(f"expected a {model} rule, got {rule.model}")


def rate_basic(rule: StrategyRule, t: float, X):
    """``X L(t) / eta(t)``."""
    _require(rule, "basic")
    return rule.rate(t, X)


def rate_signal(rule: StrategyRule, t: float, X, beta):
    """``(2 D X + F beta) / (2 eta)`` with ``beta = S - alpha``."""
    _require(rule, "signal")
    return rule.rate(t, X, beta)


def rate_stochvol(rule: StrategyRule, t: float, X, xi):
    """``(2 D X + F xi + G) / (2 eta)``."""
    _require(rule, "stochvol")
    return rule.rate(t, X, xi)
