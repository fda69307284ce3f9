import numpy as np
import pytest

from nfdelay.kernel import GaussianPulse, KernelParams

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def model1():
    """Inverse Mexican hat used for breathing 1d pulses."""
    return KernelParams(1.3, 4.0, 1.1, 2.0, 1)


@pytest.fixture
def model2():
    return KernelParams(1.0, 1.5, 1.5, 1.0, 1)


@pytest.fixture
def model1_pulse(model1):
    from nfdelay.pulse_existence import solve_halfwidth
    sols = solve_halfwidth(model1, GaussianPulse(0.4, 1.5), 0.3)
    return sols[0]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
