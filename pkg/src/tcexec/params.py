"""Model parameters, time grids and JSON config ingestion.

Three parameter sets are supported, one per execution model:

* ``basic``    -- arithmetic Brownian price with deterministic volatility and
  temporary impact.
* ``signal``   -- price mean-reverting towards an observable random pricing
  signal.
* ``stochvol`` -- volatility driven by an exogenous market-state diffusion.

Every time-varying parameter is a :class:`ParamCurve`.  In a config document a
scalar denotes a constant curve and a list of ``[t, value]`` pairs denotes a
piecewise-linear sampled curve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np

__all__ = [
    "ConfigError",
    "TimeGrid",
    "ParamCurve",
    "BasicModelParams",
    "SignalModelParams",
    "StochVolModelParams",
    "ModelParams",
    "eval_curve",
    "load_config",
    "load_config_file",
    "params_to_dict",
    "dump_config",
    "DEFAULT_N_STEPS",
    "builtin_config_text",
    "load_builtin",
]

DEFAULT_N_STEPS = 5000


class ConfigError(ValueError):
    """Invalid config document or parameter invariant violation."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = t_start + k (t_end - t_start) / n_steps``."""

    t_end: float
    n_steps: int
    t_start: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise ConfigError("grid bounds must be finite", "T")
        if not self.t_end > self.t_start:
            raise ConfigError(f"horizon must be positive, got {self.t_end - self.t_start}", "T")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ConfigError(f"need an integer n_steps >= 2, got {self.n_steps}", "n_steps")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def horizon(self) -> float:
        return self.t_end - self.t_start

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def times(self) -> np.ndarray:
        k = np.arange(self.n_steps + 1, dtype=float)
        t = self.t_start + self.horizon * k / self.n_steps
        t[-1] = self.t_end
        return t

    def refine(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.t_end, self.n_steps * int(factor), self.t_start)


@dataclass(frozen=True)
class ParamCurve:
    """Deterministic parameter on ``[0, T]``, linear between samples.

    Outside the sampled span the end values are held constant.
    """

    samples: tuple[tuple[float, float], ...]
    kind: str = "sampled"
    _t: np.ndarray = field(init=False, repr=False, compare=False)
    _v: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("constant", "sampled"):
            raise ConfigError(f"unknown curve kind {self.kind!r}")
        samples = tuple((float(t), float(v)) for t, v in self.samples)
        if not samples:
            raise ConfigError("curve needs at least one sample")
        if self.kind == "constant" and len(samples) != 1:
            raise ConfigError("constant curve carries exactly one sample")
        t = np.array([s[0] for s in samples])
        v = np.array([s[1] for s in samples])
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ConfigError("curve samples must be finite")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("sample times must be strictly increasing")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "_t", t)
        object.__setattr__(self, "_v", v)

    @classmethod
    def constant(cls, value: float) -> "ParamCurve":
        return cls(((0.0, float(value)),), "constant")

    @classmethod
    def sampled(cls, pairs) -> "ParamCurve":
        return cls(tuple((t, v) for t, v in pairs), "sampled")

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def value(self) -> float:
        """The constant value; only defined for constant curves."""
        if not self.is_constant:
            raise ValueError("sampled curve has no single value")
        return self.samples[0][1]

    def __call__(self, t):
        if self.is_constant:
            if np.ndim(t) == 0:
                return self.samples[0][1]
            return np.full(np.shape(t), self.samples[0][1])
        out = np.interp(t, self._t, self._v)
        return float(out) if np.ndim(t) == 0 else out

    def min(self) -> float:
        return float(self._v.min())

    def covers(self, t_start: float, t_end: float) -> bool:
        return self.is_constant or (self._t[0] <= t_start and self._t[-1] >= t_end)

    def to_json(self):
        if self.is_constant:
            return self.samples[0][1]
        return [[t, v] for t, v in self.samples]


def eval_curve(curve: ParamCurve, t: float, T: float) -> float:
    """Evaluate ``curve`` at ``t``, which must lie in ``[0, T]``."""
    if not 0.0 <= t <= T:
        raise ValueError(f"t={t} outside [0, {T}]")
    return curve(t)


def _check_curve(curve: ParamCurve, name: str, grid: TimeGrid, *, nonneg=False, positive=False):
    if not curve.covers(grid.t_start, grid.t_end):
        raise ConfigError(f"samples must span [{grid.t_start}, {grid.t_end}]", name)
    if positive and curve.min() <= 0:
        raise ConfigError(f"must be strictly positive, min is {curve.min()}", name)
    if nonneg and curve.min() < 0:
        raise ConfigError(f"must be nonnegative, min is {curve.min()}", name)


def _check_scalar(value: float, name: str):
    if not math.isfinite(value):
        raise ConfigError("must be finite", name)


@dataclass(frozen=True)
class _Common:
    def _check_common(self):
        _check_curve(self.eta, "eta", self.horizon, positive=True)
        for name in ("mu", "x0", "s0"):
            _check_scalar(getattr(self, name), name)
        if self.mu < 0:
            raise ConfigError(f"risk aversion must be >= 0, got {self.mu}", "mu")

    @property
    def T(self) -> float:
        return self.horizon.t_end


@dataclass(frozen=True)
class BasicModelParams(_Common):
    sigma: ParamCurve
    eta: ParamCurve
    mu: float
    x0: float
    s0: float
    horizon: TimeGrid

    model = "basic"

    def __post_init__(self):
        self._check_common()
        _check_curve(self.sigma, "sigma", self.horizon, nonneg=True)


@dataclass(frozen=True)
class SignalModelParams(_Common):
    theta: ParamCurve
    sigma1: ParamCurve
    sigma2: ParamCurve
    eta: ParamCurve
    mu: float
    x0: float
    s0: float
    alpha0: float
    horizon: TimeGrid

    model = "signal"

    def __post_init__(self):
        self._check_common()
        _check_scalar(self.alpha0, "alpha0")
        _check_curve(self.theta, "theta", self.horizon, nonneg=True)
        _check_curve(self.sigma1, "sigma1", self.horizon, nonneg=True)
        _check_curve(self.sigma2, "sigma2", self.horizon, nonneg=True)

    @property
    def beta0(self) -> float:
        return self.s0 - self.alpha0


@dataclass(frozen=True)
class StochVolModelParams(_Common):
    a_xi: ParamCurve
    b_xi: ParamCurve
    eta: ParamCurve
    mu: float
    x0: float
    s0: float
    xi0: float
    horizon: TimeGrid

    model = "stochvol"

    def __post_init__(self):
        self._check_common()
        _check_scalar(self.xi0, "xi0")
        _check_curve(self.a_xi, "a_xi", self.horizon)
        _check_curve(self.b_xi, "b_xi", self.horizon, nonneg=True)


ModelParams = Union[BasicModelParams, SignalModelParams, StochVolModelParams]

_MODELS = {
    "basic": (BasicModelParams, ("sigma", "eta"), ("mu", "x0", "s0")),
    "signal": (SignalModelParams, ("theta", "sigma1", "sigma2", "eta"), ("mu", "x0", "s0", "alpha0")),
    "stochvol": (StochVolModelParams, ("a_xi", "b_xi", "eta"), ("mu", "x0", "s0", "xi0")),
}
_OPTIONAL = {"n_steps", "description"}


def _parse_curve(raw: Any, name: str) -> ParamCurve:
    if isinstance(raw, bool):
        raise ConfigError("expected a number or a list of [t, value] pairs", name)
    if isinstance(raw, (int, float)):
        return ParamCurve.constant(raw)
    if isinstance(raw, list):
        pairs = []
        for i, item in enumerate(raw):
            if (not isinstance(item, list) or len(item) != 2
                    or not all(isinstance(z, (int, float)) and not isinstance(z, bool) for z in item)):
                raise ConfigError("expected a [t, value] pair of numbers", f"{name}[{i}]")
            pairs.append(item)
        try:
            return ParamCurve.sampled(pairs)
        except ConfigError as exc:
            raise ConfigError(str(exc), name) from None
    raise ConfigError("expected a number or a list of [t, value] pairs", name)


def _parse_number(raw: Any, name: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError("expected a number", name)
    return float(raw)


def load_config(document: Union[str, bytes, dict]) -> ModelParams:
    """Parse and validate a JSON config document.

    ``document`` may be JSON text or an already-decoded mapping.  Raises
    :class:`ConfigError` naming the offending field.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise ConfigError("config must be a JSON object")
    model = document.get("model")
    if model not in _MODELS:
        raise ConfigError(f"unknown model {model!r}; expected one of {sorted(_MODELS)}", "model")
    cls, curve_fields, scalar_fields = _MODELS[model]

    expected = set(curve_fields) | set(scalar_fields) | {"model", "T"}
    unknown = set(document) - expected - _OPTIONAL
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)}")
    for name in sorted(expected - set(document)):
        raise ConfigError("missing required field", name)

    n_steps = document.get("n_steps", DEFAULT_N_STEPS)
    if isinstance(n_steps, bool) or not isinstance(n_steps, int):
        raise ConfigError("expected an integer", "n_steps")
    horizon = TimeGrid(_parse_number(document["T"], "T"), n_steps)
    kwargs = {name: _parse_curve(document[name], name) for name in curve_fields}
    kwargs.update({name: _parse_number(document[name], name) for name in scalar_fields})
    return cls(horizon=horizon, **kwargs)


def load_config_file(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        return load_config(fh.read())


def params_to_dict(params: ModelParams) -> dict:
    """Inverse of :func:`load_config` (up to float formatting)."""
    _, curve_fields, scalar_fields = _MODELS[params.model]
    out: dict[str, Any] = {"model": params.model}
    for name in curve_fields:
        out[name] = getattr(params, name).to_json()
    for name in scalar_fields:
        out[name] = getattr(params, name)
    out["T"] = params.horizon.t_end
    out["n_steps"] = params.horizon.n_steps
    return out


def dump_config(params: ModelParams) -> str:
    return json.dumps(params_to_dict(params), indent=2)


BUILTIN_CONFIGS = ("basic", "signal", "stochvol", "figures")


def builtin_config_text(name: str) -> str:
    """Text of a shipped demo config (``basic``, ``signal``, ``stochvol``, ``figures``)."""
    from importlib.resources import files

    if name not in BUILTIN_CONFIGS:
        raise ConfigError(f"no built-in config {name!r}; choose from {list(BUILTIN_CONFIGS)}")
    return files("tcexec").joinpath("configs").joinpath(f"{name}.json").read_text(encoding="utf-8")


def load_builtin(name: str) -> ModelParams:
    return load_config(builtin_config_text(name))
