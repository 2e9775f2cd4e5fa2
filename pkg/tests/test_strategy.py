import numpy as np
import pytest

from tcexec.closedform import basic_rate_closed
from tcexec.strategy import make_rule, rate_basic, rate_signal, rate_stochvol


def test_basic_rate_oracle(basic_params, basic_table):
    rule = make_rule(basic_params, basic_table)
    assert rate_basic(rule, 0.0, 100.0) == pytest.approx(158.113925982, rel=1e-10)
    for t in (0.7, 2.5, 4.9):
        assert rate_basic(rule, t, 40.0) == pytest.approx(basic_rate_closed(t, 40.0, 1.0, 0.5, 0.1, 5.0), rel=1e-9)


def test_tail_is_linear_liquidation(basic_params, basic_table):
    rule = make_rule(basic_params, basic_table)
    t = 5.0 - 0.5 * basic_table.cutoff
    assert rule.rate(t, 3.0) == pytest.approx(3.0 / (5.0 - t))
    with pytest.raises(ValueError):
        rule.rate(5.0, 1.0)
    with pytest.raises(ValueError):
        rule.rate(-0.1, 1.0)


def test_signal_rate_direction(signal_params, signal_table):
    rule = make_rule(signal_params, signal_table)
    flat = rate_signal(rule, 0.0, 100.0, 0.0)
    assert rate_signal(rule, 0.0, 100.0, -2.0) > flat > rate_signal(rule, 0.0, 100.0, 2.0)


def test_stochvol_rate_is_affine(stochvol_params, stochvol_table):
    rule = make_rule(stochvol_params, stochvol_table)
    r = [rate_stochvol(rule, 1.0, 50.0, xi) for xi in (0.0, 1.0, 2.0)]
    assert r[2] - r[1] == pytest.approx(r[1] - r[0], rel=1e-12)


def test_model_mismatch(basic_params, basic_table, signal_table):
    rule = make_rule(basic_params, basic_table)
    with pytest.raises(ValueError):
        rate_signal(rule, 0.0, 1.0, 0.0)
    with pytest.raises(TypeError):
        make_rule(basic_params, signal_table)


def test_rate_symmetric_in_sign(basic_params, basic_table):
    rule = make_rule(basic_params, basic_table)
    X = np.array([-30.0, 30.0])
    r = rule.rate(1.0, X)
    assert r[0] == -r[1]
