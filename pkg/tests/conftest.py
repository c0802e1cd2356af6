import numpy as np
import pytest

from cyclecast import series

# verdict lines collected by test_acceptance.report / .skip
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def central_difference(f, theta: np.ndarray, coords=None, h_base: float = 1e-6):
    """Central-difference gradient of scalar f at theta, per coordinate."""
    theta = theta.astype(np.float64)
    flat = theta.reshape(-1)
    coords = range(flat.size) if coords is None else coords
    grads = {}
    for i in coords:
        h = h_base * (1.0 + abs(flat[i]))
        plus = flat.copy()
        plus[i] += h
        minus = flat.copy()
        minus[i] -= h
        grads[i] = (f(plus.reshape(theta.shape)) -
                    f(minus.reshape(theta.shape))) / (2 * h)
    return grads


def assert_grad_close(analytic: np.ndarray, f, theta: np.ndarray,
                      coords=None, rtol: float = 1e-4):
    numeric = central_difference(f, theta, coords)
    flat = analytic.reshape(-1)
    for i, g in numeric.items():
        # floor absorbs central-difference roundoff on near-zero gradients
        denom = max(abs(g), abs(flat[i]), 1e-6)
        assert abs(flat[i] - g) / denom < rtol, (
            f"coord {i}: analytic {flat[i]}, numeric {g}"
        )


def make_series(values, start="2020-01-06 00:00:00", resolution=3600,
                name="test"):
    from datetime import datetime
    return series.TimeSeries(
        start=datetime.strptime(start, "%Y-%m-%d %H:%M:%S"),
        resolution=resolution,
        values=np.asarray(values, dtype=np.float64),
        name=name,
    )


@pytest.fixture
def hourly_series():
    rng = np.random.default_rng(7)
    return make_series(rng.uniform(10, 20, 24 * 60))
