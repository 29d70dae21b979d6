"""Gaussian covariance and comparison inequalities.

``g`` below is centred Gaussian with variance ``sigma**2``; all expectations
are Gauss-Hermite sums.
"""

import math

import numpy as np
from scipy.integrate import quad as _adaptive_quad
from scipy.special import logsumexp

from ..exceptions import PreconditionError, WeightNormalizationError
from ..quad import SQRT2, hermite_rule

MONOTONE = "monotone"
EVEN_ODD = "even_odd"


def gibbs_weight(energy, sigma, rule=None):
    """``W(x, y) = exp(energy(y)) / E exp(energy(x + g))``.

    The normaliser uses the same quadrature as :func:`covariance_check`, so
    ``E W(x, x + g) = 1`` holds to rounding.
    """
    rule = hermite_rule() if rule is None else rule

    def W(x, y):
        x = np.asarray(x, dtype=float)
        pts = x[..., None] + SQRT2 * sigma * rule.nodes
        log_z = logsumexp(energy(pts), b=rule.prob_weights, axis=-1)
        y = np.asarray(y, dtype=float)
        if y.ndim > x.ndim:
            log_z = log_z[..., None]
        return np.exp(energy(y) - log_z)

    return W


def interpolation_weight(phi1, phi2, m1, m2, s, sigma, rule=None):
    """Gibbs weight for the energy ``(1 - s) m1 phi1 + s m2 phi2``."""
    return gibbs_weight(lambda y: (1.0 - s) * m1 * phi1(y) + s * m2 * phi2(y), sigma, rule)


def _window(x, sigma, n=801):
    return np.linspace(x - 10.0 * sigma - 1.0, x + 10.0 * sigma + 1.0, n)


def _check_monotone(f, grid, name):
    if np.min(np.diff(f(grid))) < -1e-12:
        raise PreconditionError(f"{name} is not nondecreasing")


def _check_even_odd(f_even, f_odd, W, x, sigma):
    u = np.linspace(0.0, abs(x) + 10.0 * sigma + 1.0, 801)
    if np.max(np.abs(f_even(u) - f_even(-u))) > 1e-10:
        raise PreconditionError("even function is not even")
    if np.max(np.abs(f_odd(u) + f_odd(-u))) > 1e-10:
        raise PreconditionError("odd function is not odd")
    _check_monotone(f_even, u, "even function on [0, inf)")
    _check_monotone(f_odd, u, "odd function on [0, inf)")
    if np.max(np.abs(W(x, u[None, :]) - W(x, -u[None, :]))) > 1e-10 * max(1.0, float(np.max(W(x, u[None, :])))):
        raise PreconditionError("weight is not even in y")


def _is_even(f, x, sigma):
    u = np.linspace(0.0, abs(x) + 10.0 * sigma + 1.0, 201)
    return np.max(np.abs(f(u) - f(-u))) <= 1e-10


def covariance_check(f1, f2, W, x, sigma, variant=MONOTONE, rule=None, check=True):
    """``E f1 f2 W - E f1 W * E f2 W`` at ``(x, x + g)``.

    ``variant="monotone"`` needs nondecreasing ``f1, f2``; ``variant="even_odd"``
    needs one even and one odd function, both nondecreasing on ``[0, inf)``,
    ``W`` even in ``y`` and ``x >= 0``. Either way the result is nonnegative.
    """
    rule = hermite_rule() if rule is None else rule
    x = float(x)
    if check:
        if variant == MONOTONE:
            grid = _window(x, sigma)
            _check_monotone(f1, grid, "f1")
            _check_monotone(f2, grid, "f2")
        elif variant == EVEN_ODD:
            if x < 0:
                raise PreconditionError("even_odd variant needs x >= 0")
            f_even, f_odd = (f1, f2) if _is_even(f1, x, sigma) else (f2, f1)
            _check_even_odd(f_even, f_odd, W, x, sigma)
        else:
            raise PreconditionError(f"unknown variant {variant!r}")
    pts = x + SQRT2 * sigma * rule.nodes
    p = rule.prob_weights
    w = np.asarray(W(np.asarray(x), pts[None, :]), dtype=float).reshape(-1)
    mass = float(p @ w)
    if abs(mass - 1.0) > 1e-9:
        raise WeightNormalizationError(f"E W = {mass:.12g}, expected 1")
    a, b = f1(pts), f2(pts)
    pw = p * w
    return float(pw @ (a * b) - (pw @ a) * (pw @ b))


def odd_comparison_check(f1, f2, xs, sigma, rule=None, check=True):
    """``min_x E f2(x + g) - E f1(x + g)`` over ``xs >= 0`` for odd ``f1 <= f2`` on ``[0, inf)``."""
    rule = hermite_rule() if rule is None else rule
    xs = np.asarray(xs, dtype=float)
    if check:
        if np.any(xs < 0):
            raise PreconditionError("x grid must be nonnegative")
        u = np.linspace(0.0, float(np.max(xs)) + 10.0 * sigma + 1.0, 2001)
        for f, name in ((f1, "f1"), (f2, "f2")):
            if np.max(np.abs(f(u) + f(-u))) > 1e-10:
                raise PreconditionError(f"{name} is not odd")
        if np.any(f1(u) > f2(u) + 1e-12):
            raise PreconditionError("f1 <= f2 fails on [0, inf)")
    pts = xs[:, None] + SQRT2 * sigma * rule.nodes
    diff = (f2(pts) - f1(pts)) @ rule.prob_weights
    return float(np.min(diff))


def sinh_representation(f, x, sigma):
    """``2 int_0^inf f(u) rho(u, x) sinh(u x / sigma^2) du`` by adaptive quadrature.

    ``rho(u, x) sinh(ux/sigma^2)`` is evaluated as a difference of two
    Gaussian densities so nothing overflows.
    """
    c = 1.0 / math.sqrt(2.0 * math.pi * sigma * sigma)

    def integrand(u):
        return f(u) * c * (math.exp(-((u - x) ** 2) / (2 * sigma * sigma)) - math.exp(-((u + x) ** 2) / (2 * sigma * sigma)))

    upper = abs(x) + 40.0 * sigma
    val, _ = _adaptive_quad(integrand, 0.0, upper, epsabs=1e-14, epsrel=1e-13, limit=400, points=[abs(x)])
    return val


def omega1_integral(f_even, f_odd, W, x, sigma):
    """The covariance written as ``int_{Omega_1} K L ds dt``.

    ``Omega_1 = {s >= t, |s| <= |t|}`` = ``{t <= 0, t <= s <= -t}``. For
    admissible inputs both ``K`` and ``L`` are nonnegative there.
    """
    from scipy.integrate import dblquad

    s2 = sigma * sigma

    def K(s, t):
        w = W(np.asarray(x), np.array([[s, t]]))[0]
        return w[0] * w[1] * (f_even(s) - f_even(t)) * (f_odd(s) - f_odd(t)) / (2 * math.pi * s2)

    def L(s, t):
        return math.exp(-((s - x) ** 2 + (t - x) ** 2) / (2 * s2)) - math.exp(-((s + x) ** 2 + (t + x) ** 2) / (2 * s2))

    lo = -(abs(x) + 12.0 * sigma)
    val, _ = dblquad(lambda s, t: K(s, t) * L(s, t), lo, 0.0, lambda t: t, lambda t: -t, epsabs=1e-13, epsrel=1e-10)
    return val


# --------------------------------------------------------------------------
# randomised families


def random_nondecreasing(rng):
    a, b, c = rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0), rng.uniform(-1.0, 1.0)
    kind = int(rng.integers(4))
    if kind == 0:
        return lambda u: a * np.tanh(b * u + c)
    if kind == 1:
        return lambda u: a * u + c
    if kind == 2:
        return lambda u: a * np.arctan(b * u + c)
    return lambda u: a * np.logaddexp(0.0, b * u + c)


def random_odd(rng):
    a, b = rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)
    kind = int(rng.integers(4))
    if kind == 0:
        return lambda u: a * np.tanh(b * u)
    if kind == 1:
        return lambda u: a * u
    if kind == 2:
        return lambda u: a * np.arctan(b * u)
    return lambda u: a * np.asarray(u) ** 3 / (1.0 + b)


def random_even(rng):
    a, b = rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)
    kind = int(rng.integers(4))
    if kind == 0:
        return lambda u: a * (np.abs(b * np.asarray(u)) + np.log1p(np.exp(-2 * np.abs(b * np.asarray(u)))))
    if kind == 1:
        return lambda u: a * np.asarray(u) ** 2
    if kind == 2:
        return lambda u: a * np.sqrt(1.0 + (b * np.asarray(u)) ** 2)
    return lambda u: a * (1.0 - np.exp(-b * np.asarray(u) ** 2))


def random_energy(rng, even):
    c1, b = rng.uniform(0.0, 1.0), rng.uniform(0.3, 1.5)
    c2 = rng.uniform(-0.1, 0.1)
    shift = 0.0 if even else rng.uniform(-1.0, 1.0)
    tilt = 0.0 if even else rng.uniform(-0.5, 0.5)

    def energy(y):
        y = np.asarray(y, dtype=float)
        z = b * (y - shift)
        return c1 * (np.abs(z) + np.log1p(np.exp(-2 * np.abs(z)))) + c2 * y * y + tilt * y

    return energy


def random_case(rng, variant, rule=None):
    """A randomised admissible ``(f1, f2, W, x, sigma)``."""
    sigma = rng.uniform(0.3, 1.5)
    if variant == MONOTONE:
        f1, f2 = random_nondecreasing(rng), random_nondecreasing(rng)
        x = rng.uniform(-3.0, 3.0)
        W = gibbs_weight(random_energy(rng, even=False), sigma, rule)
    else:
        f1, f2 = random_even(rng), random_odd(rng)
        if rng.integers(2):
            f1, f2 = f2, f1
        x = rng.uniform(0.0, 3.0)
        W = gibbs_weight(random_energy(rng, even=True), sigma, rule)
    return f1, f2, W, x, sigma


def inequality_suite(n=200, seed=0, rule=None):
    """Run ``n`` randomised covariance checks alternating between variants.

    Returns a list of row dicts with the signed covariance.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        variant = MONOTONE if i % 2 == 0 else EVEN_ODD
        f1, f2, W, x, sigma = random_case(rng, variant, rule)
        cov = covariance_check(f1, f2, W, x, sigma, variant, rule)
        rows.append({"case": i, "variant": variant, "x": x, "sigma": sigma, "covariance": cov})
    return rows
