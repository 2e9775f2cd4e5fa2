import pytest

from tcexec.coeffs import solve_basic, solve_signal, solve_stochvol
from tcexec.validate import reference_params


@pytest.fixture(scope="session")
def basic_params():
    return reference_params("basic")


@pytest.fixture(scope="session")
def signal_params():
    return reference_params("signal")


@pytest.fixture(scope="session")
def stochvol_params():
    return reference_params("stochvol")


@pytest.fixture(scope="session")
def basic_table(basic_params):
    return solve_basic(basic_params)


@pytest.fixture(scope="session")
def signal_table(signal_params):
    return solve_signal(signal_params)


@pytest.fixture(scope="session")
def stochvol_table(stochvol_params):
    return solve_stochvol(stochvol_params)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
