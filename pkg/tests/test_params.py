import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcexec.params import (
    BasicModelParams,
    ConfigError,
    ParamCurve,
    TimeGrid,
    dump_config,
    eval_curve,
    load_builtin,
    load_config,
    params_to_dict,
)

BASIC = {"model": "basic", "sigma": 0.5, "eta": 0.1, "mu": 1, "x0": 100, "s0": 100, "T": 5}


def test_grid_endpoints_exact():
    g = TimeGrid(5.0, 3)
    assert g.times[0] == 0.0 and g.times[-1] == 5.0
    assert g.dt == pytest.approx(5 / 3)
    assert g.refine(4).n_steps == 12


@pytest.mark.parametrize("T,n", [(0.0, 10), (-1.0, 10), (1.0, 1), (1.0, 2.5), (math.inf, 10)])
def test_grid_rejects(T, n):
    with pytest.raises(ConfigError):
        TimeGrid(T, n)


def test_curve_constant_and_sampled():
    c = ParamCurve.constant(0.3)
    assert c(2.0) == 0.3
    assert np.all(c(np.array([0.0, 1.0])) == 0.3)
    s = ParamCurve.sampled([[0, 1.0], [2, 3.0]])
    assert s(1.0) == pytest.approx(2.0)
    assert s(5.0) == 3.0
    assert s.to_json() == [[0.0, 1.0], [2.0, 3.0]]
    with pytest.raises(ValueError):
        s.value


def test_curve_rejects_unsorted():
    with pytest.raises(ConfigError):
        ParamCurve.sampled([[1, 1.0], [0, 2.0]])


def test_eval_curve_domain():
    c = ParamCurve.constant(1.0)
    assert eval_curve(c, 5.0, 5.0) == 1.0
    with pytest.raises(ValueError):
        eval_curve(c, 5.1, 5.0)


def test_load_basic():
    p = load_config(json.dumps(BASIC))
    assert isinstance(p, BasicModelParams)
    assert p.T == 5.0 and p.horizon.n_steps == 5000
    assert p.sigma.value == 0.5


@pytest.mark.parametrize("patch,field", [
    ({"eta": 0.0}, "eta"),
    ({"eta": [[0, 0.1], [4, -0.1], [5, 0.1]]}, "eta"),
    ({"sigma": -0.1}, "sigma"),
    ({"mu": -1}, "mu"),
    ({"x0": "100"}, "x0"),
    ({"sigma": [[1, 0.5], [5, 0.5]]}, "sigma"),
    ({"n_steps": 1}, "n_steps"),
    ({"T": True}, "T"),
])
def test_load_rejects_with_field(patch, field):
    with pytest.raises(ConfigError) as info:
        load_config({**BASIC, **patch})
    assert field in str(info.value)


def test_load_rejects_unknown_and_missing():
    with pytest.raises(ConfigError, match="unknown"):
        load_config({**BASIC, "gamma": 1})
    doc = dict(BASIC)
    del doc["eta"]
    with pytest.raises(ConfigError, match="eta"):
        load_config(doc)
    with pytest.raises(ConfigError, match="model"):
        load_config({**BASIC, "model": "heston"})
    with pytest.raises(ConfigError, match="JSON"):
        load_config("{not json")


def test_builtin_configs_load():
    assert load_builtin("signal").beta0 == -2.0
    assert load_builtin("stochvol").xi0 == 1.0
    with pytest.raises(ConfigError):
        load_builtin("nope")


pos = st.floats(0.01, 10.0)
curve = st.one_of(pos.map(float), st.lists(pos, min_size=2, max_size=5).map(
    lambda vs: [[5.0 * i / (len(vs) - 1), v] for i, v in enumerate(vs)]))


@settings(max_examples=50, deadline=None)
@given(sigma=curve, eta=curve, mu=st.floats(0, 5), x0=st.floats(-1e3, 1e3), n=st.integers(2, 50))
def test_config_round_trip(sigma, eta, mu, x0, n):
    doc = {"model": "basic", "sigma": sigma, "eta": eta, "mu": mu, "x0": x0, "s0": 100.0, "T": 5.0, "n_steps": n}
    p = load_config(doc)
    assert load_config(dump_config(p)) == p
    assert load_config(params_to_dict(p)) == p
