import math

import numpy as np
import pytest
from scipy.integrate import quad

from parisi_lab import log_cosh, smoothed_relu, soft_abs
from parisi_lab.initial import scaled, shifted

ACCEPTANCE = {}


def gaussian_oracle(f, x, sigma):
    """``E f(x + sigma z)`` by adaptive quadrature over ``[-12 sigma, 12 sigma]``."""
    dens = lambda u: math.exp(-0.5 * (u / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    val, _ = quad(lambda u: f(x + u) * dens(u), -12 * sigma, 12 * sigma, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def log_moment_oracle(f, x, sigma, m):
    """``(1/m) log E exp(m f(x + sigma z))`` by adaptive quadrature."""
    if m == 0:
        return gaussian_oracle(f, x, sigma)
    c = f(x)
    return c + math.log(gaussian_oracle(lambda y: math.exp(m * (f(y) - c)), x, sigma)) / m


def even_pairs():
    lc = log_cosh()
    return [(lc, scaled(lc, 2.0)), (soft_abs(2.0), soft_abs(0.5)), (lc, shifted(lc, 0.3))]


def nondecreasing_pairs():
    sr = smoothed_relu(1.0)
    return [(sr, scaled(sr, 2.0)), (sr, shifted(sr, 0.3)), (sr, shifted(scaled(sr, 1.5), 0.1))]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record_acceptance():
    def record(number, title, passed, detail):
        ACCEPTANCE[number] = (title, bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"AC{number:02d} {'PASS' if passed else 'FAIL'} {title}: {detail}")
