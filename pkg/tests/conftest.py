import numpy as np
import pytest

from noncausal.mar_process import MarModel, simulate
from noncausal.timeseries import BoundsSeries


@pytest.fixture(scope="session")
def mar11():
    return MarModel.from_coeffs([0.5], [0.7], 5.0, 1.0)


@pytest.fixture(scope="session")
def mar11_series(mar11):
    y, _ = simulate(mar11, 400, seed=7)
    return y


def constant_bounds(series, lower, upper, extra=24):
    n = len(series) + extra
    return BoundsSeries(series.start, np.full(n, float(lower)), np.full(n, float(upper)))


# -- acceptance reporting --------------------------------------------------------

ACCEPTANCE = {}


def record(number, passed, detail):
    """Store one acceptance outcome; printed now and again in the terminal summary.

    ``passed=None`` marks a skipped criterion.
    """
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    line = f"criterion {number}: {status} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
