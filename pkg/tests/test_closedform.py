import math

import numpy as np
import pytest

from tcexec.closedform import basic_L_closed, basic_rate_closed, basic_trajectory_closed, coth, ucoth


def test_known_values():
    # sqrt(mu eta sigma^2) coth(kappa T) with kappa = sqrt(2.5), T = 5
    assert basic_L_closed(0.0, 1.0, 0.5, 0.1, 5.0) == pytest.approx(0.15811392598, rel=1e-10)
    assert basic_rate_closed(0.0, 100.0, 1.0, 0.5, 0.1, 5.0) == pytest.approx(158.11392598, rel=1e-10)


def test_coth_branches_continuous():
    for u in (1e-8, 20.0):
        assert coth(u * (1 - 1e-12)) == pytest.approx(coth(u * (1 + 1e-12)), rel=1e-9)
    assert coth(1.0) == pytest.approx(math.cosh(1) / math.sinh(1))
    assert ucoth(0.0) == 1.0
    with pytest.raises(ValueError):
        coth(0.0)


def test_risk_neutral_limit():
    assert basic_L_closed(1.0, 0.0, 0.5, 0.1, 5.0) == pytest.approx(0.1 / 4.0, rel=1e-15)
    t = np.linspace(0, 5, 11)
    assert np.allclose(basic_trajectory_closed(t, 100.0, 0.0, 0.5, 0.1, 5.0), 100 * (5 - t) / 5)


def test_trajectory_endpoints_and_large_kappa():
    X = basic_trajectory_closed(np.array([0.0, 5.0]), 100.0, 1.0, 0.5, 0.1, 5.0)
    assert X[0] == pytest.approx(100.0, rel=1e-14) and X[1] == 0.0
    big = basic_trajectory_closed(np.linspace(0, 5, 50), 100.0, 1e6, 1.0, 1e-3, 5.0)
    assert np.all(np.isfinite(big)) and np.all(np.diff(big) <= 0)


def test_domain():
    with pytest.raises(ValueError):
        basic_L_closed(5.0, 1.0, 0.5, 0.1, 5.0)
