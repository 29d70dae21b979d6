"""Initial conditions ``phi`` with bounded first and second derivatives.

Besides the builtin library this module holds the lower approximation
pipeline: a convex ``phi`` is replaced by a continuous piecewise-linear
minorant ``s_r`` (secants on a regular partition of ``[-r, r]``, supporting
lines outside, everything shifted down by ``2/r``) which is then convolved
with a scaled bump kernel. The result is twice differentiable, exactly linear
outside ``[-r - eps_r, r + eps_r]`` and lies at least ``1/(2r)`` below ``phi``.
"""

import math
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad as _adaptive_quad
from scipy.special import expit

from ._validation import check_positive_int, check_unit_interval
from .exceptions import ConfigError, PreconditionError

EVEN_CONVEX = "even_convex"
NONDECREASING_CONVEX = "nondecreasing_convex"
NO_CLASS = "none"
LOG2 = math.log(2.0)


@dataclass(frozen=True)
class Tail:
    """Exact linearity data: ``phi(x) = A x + B`` for ``x >= M`` (right) / ``x <= -M`` (left)."""

    M: float
    A_right: float
    B_right: float
    A_left: float
    B_left: float

    def right(self, x):
        return self.A_right * np.asarray(x, dtype=float) + self.B_right

    def left(self, x):
        return self.A_left * np.asarray(x, dtype=float) + self.B_left


@dataclass(frozen=True, eq=False)
class InitialCondition:
    name: str
    value: Callable
    deriv1: Callable
    deriv2: Callable
    d1_bound: float
    d2_bound: float
    class_tag: str = NO_CLASS
    tail: Optional[Tail] = None

    def __call__(self, x):
        return self.value(x)

    def __repr__(self):
        return f"InitialCondition({self.name!r}, class_tag={self.class_tag!r})"


# --------------------------------------------------------------------------
# builtins


def _log_cosh(x):
    a = np.abs(np.asarray(x, dtype=float))
    return a + np.log1p(np.exp(-2.0 * a)) - LOG2


def _sech2(x):
    e = np.exp(-2.0 * np.abs(np.asarray(x, dtype=float)))
    return 4.0 * e / (1.0 + e) ** 2


def log_cosh():
    return InitialCondition(
        "log_cosh",
        _log_cosh,
        np.tanh,
        _sech2,
        d1_bound=1.0,
        d2_bound=1.0,
        class_tag=EVEN_CONVEX,
        tail=Tail(12.0, 1.0, -LOG2, -1.0, -LOG2),
    )


def linear(A, B=0.0):
    A, B = float(A), float(B)
    tag = NONDECREASING_CONVEX if A >= 0 else NO_CLASS
    return InitialCondition(
        f"linear({A:g},{B:g})",
        lambda x: A * np.asarray(x, dtype=float) + B,
        lambda x: np.full(np.shape(x), A),
        lambda x: np.zeros(np.shape(x)),
        d1_bound=abs(A),
        d2_bound=0.0,
        class_tag=tag,
        tail=Tail(0.0, A, B, A, B),
    )


def soft_abs(scale=1.0):
    """``scale * log cosh(x / scale)``: a smooth ``|x| - scale*log 2``."""
    c = float(scale)
    if c <= 0:
        raise ConfigError("soft_abs scale must be positive")
    return InitialCondition(
        f"soft_abs({c:g})",
        lambda x: c * _log_cosh(np.asarray(x, dtype=float) / c),
        lambda x: np.tanh(np.asarray(x, dtype=float) / c),
        lambda x: _sech2(np.asarray(x, dtype=float) / c) / c,
        d1_bound=1.0,
        d2_bound=1.0 / c,
        class_tag=EVEN_CONVEX,
        tail=Tail(12.0 * c, 1.0, -c * LOG2, -1.0, -c * LOG2),
    )


def smoothed_relu(scale=1.0):
    """Softplus ``scale * log(1 + exp(x / scale))``."""
    c = float(scale)
    if c <= 0:
        raise ConfigError("smoothed_relu scale must be positive")

    def d1(x):
        return expit(np.asarray(x, dtype=float) / c)

    def d2(x):
        p = d1(x)
        return p * (1.0 - p) / c

    return InitialCondition(
        f"smoothed_relu({c:g})",
        lambda x: c * np.logaddexp(0.0, np.asarray(x, dtype=float) / c),
        d1,
        d2,
        d1_bound=1.0,
        d2_bound=0.25 / c,
        class_tag=NONDECREASING_CONVEX,
        # c * log1p(exp(-M/c)) < 1e-9 * c beyond M = 21 c
        tail=Tail(21.0 * c, 1.0, 0.0, 0.0, 0.0),
    )


BUILTINS = {
    "log_cosh": log_cosh,
    "linear": linear,
    "soft_abs": soft_abs,
    "smoothed_relu": smoothed_relu,
}

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")


def builtin(name, *args):
    """Look up a builtin by name; ``name`` may carry arguments, e.g. ``"linear(0.5, 1)"``."""
    match = _CALL.match(str(name))
    if not match:
        raise ConfigError(f"unknown initial condition {name!r}")
    key, argtext = match.groups()
    if key not in BUILTINS:
        raise ConfigError(f"unknown initial condition {key!r}; choose from {sorted(BUILTINS)}")
    if argtext:
        if args:
            raise ConfigError("arguments given twice")
        try:
            args = tuple(float(a) for a in argtext.split(",") if a.strip())
        except ValueError as exc:
            raise ConfigError(f"bad arguments in {name!r}") from exc
    try:
        return BUILTINS[key](*args)
    except TypeError as exc:
        raise ConfigError(f"bad arguments for {key}: {args!r}") from exc


# --------------------------------------------------------------------------
# algebra


def scaled(phi, c):
    """``c * phi`` for ``c >= 0`` (class tag preserved)."""
    c = float(c)
    if c < 0:
        raise PreconditionError("scale factor must be nonnegative to keep convexity")
    tail = phi.tail and Tail(
        phi.tail.M, c * phi.tail.A_right, c * phi.tail.B_right, c * phi.tail.A_left, c * phi.tail.B_left
    )
    return InitialCondition(
        f"{c:g}*{phi.name}",
        lambda x: c * phi.value(x),
        lambda x: c * phi.deriv1(x),
        lambda x: c * phi.deriv2(x),
        c * phi.d1_bound,
        c * phi.d2_bound,
        phi.class_tag,
        tail,
    )


def shifted(phi, b):
    """``phi + b``."""
    b = float(b)
    tail = phi.tail and replace(phi.tail, B_right=phi.tail.B_right + b, B_left=phi.tail.B_left + b)
    return replace(phi, name=f"{phi.name}{b:+g}", value=lambda x: phi.value(x) + b, tail=tail)


def combine(alpha, phi1, phi2):
    """The mixed initial condition ``alpha*phi1 + (1 - alpha)*phi2``."""
    a = check_unit_interval(alpha, "alpha")
    b = 1.0 - a
    tail = None
    if phi1.tail is not None and phi2.tail is not None:
        t1, t2 = phi1.tail, phi2.tail
        tail = Tail(
            max(t1.M, t2.M),
            a * t1.A_right + b * t2.A_right,
            a * t1.B_right + b * t2.B_right,
            a * t1.A_left + b * t2.A_left,
            a * t1.B_left + b * t2.B_left,
        )
    tag = phi1.class_tag if phi1.class_tag == phi2.class_tag else NO_CLASS
    return InitialCondition(
        f"{a:g}*{phi1.name}+{b:g}*{phi2.name}",
        lambda x: a * phi1.value(x) + b * phi2.value(x),
        lambda x: a * phi1.deriv1(x) + b * phi2.deriv1(x),
        lambda x: a * phi1.deriv2(x) + b * phi2.deriv2(x),
        a * phi1.d1_bound + b * phi2.d1_bound,
        a * phi1.d2_bound + b * phi2.d2_bound,
        tag,
        tail,
    )


def from_config(spec):
    """Resolve a config entry: a builtin string or a table.

    Tables accept ``name``, ``args``, ``scale``, ``shift`` and ``mollify_r``.
    """
    if isinstance(spec, InitialCondition):
        return spec
    if isinstance(spec, str):
        return builtin(spec)
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"cannot resolve initial condition from {spec!r}")
    unknown = set(spec) - {"name", "args", "scale", "shift", "mollify_r"}
    if unknown:
        raise ConfigError(f"unknown initial-condition keys {sorted(unknown)}")
    phi = builtin(spec["name"], *spec.get("args", ()))
    if spec.get("scale", 1.0) != 1.0:
        phi = scaled(phi, spec["scale"])
    if spec.get("shift", 0.0):
        phi = shifted(phi, spec["shift"])
    if spec.get("mollify_r"):
        phi = mollify(build_piecewise(phi, int(spec["mollify_r"])))
    return phi


def check_condition(phi, n=10_000, lo=-50.0, hi=50.0, tol=1e-9, fd_step=1e-4, fd_tol=1e-6):
    """Sample the invariants of ``phi``; return a list of human-readable failures."""
    x = np.linspace(lo, hi, n)
    v, d1, d2 = phi.value(x), phi.deriv1(x), phi.deriv2(x)
    problems = []
    if np.max(np.abs(d1)) > phi.d1_bound + tol:
        problems.append("|deriv1| exceeds d1_bound")
    if np.min(d2) < -tol:
        problems.append("deriv2 negative (not convex)")
    if np.max(d2) > phi.d2_bound + tol:
        problems.append("deriv2 exceeds d2_bound")
    if phi.class_tag == EVEN_CONVEX and np.max(np.abs(v - phi.value(-x))) > 1e-12 * max(1.0, np.max(np.abs(v))):
        problems.append("not even")
    if phi.class_tag == NONDECREASING_CONVEX and np.min(d1) < -tol:
        problems.append("not nondecreasing")
    if phi.tail is not None:
        t = phi.tail
        side = np.linspace(t.M, t.M + 10.0, 101)
        if np.max(np.abs(phi.value(side) - t.right(side))) > tol:
            problems.append("right tail not linear")
        if np.max(np.abs(phi.value(-side) - t.left(-side))) > tol:
            problems.append("left tail not linear")
    fd = (phi.value(x + fd_step) - phi.value(x - fd_step)) / (2 * fd_step)
    if np.max(np.abs(fd - d1)) > fd_tol:
        problems.append("deriv1 inconsistent with central differences")
    return problems


# --------------------------------------------------------------------------
# pair classes

F1 = "F1"
F2 = "F2"
BOTH = "both"
NEITHER = "neither"


@dataclass(frozen=True)
class PairReport:
    """Sampled comparison of ``(phi1, phi2)``.

    ``label`` follows the class definitions; ``deriv_ordered_full`` records
    whether the derivative ordering also holds on the negative half-line.
    For even pairs it can only hold there when ``phi2 - phi1`` is constant.
    """

    even: bool
    nondecreasing: bool
    ordered: bool
    deriv_ordered_right: bool
    deriv_ordered_full: bool
    label: str


def classify_samples(x, v1, d1, v2, d2, even, nondecreasing, tol=1e-9):
    x = np.asarray(x)
    ordered = bool(np.all(v1 <= v2 + tol))
    gap = d1 - d2
    right = bool(np.all(gap[x >= 0] <= tol))
    full = bool(np.all(gap <= tol))
    in_f1 = even and ordered and right
    in_f2 = nondecreasing and ordered and right
    label = BOTH if in_f1 and in_f2 else F1 if in_f1 else F2 if in_f2 else NEITHER
    return PairReport(even, nondecreasing, ordered, right, full, label)


def classify_pair(phi1, phi2, lo=-30.0, hi=30.0, n=6001, tol=1e-9):
    x = np.linspace(lo, hi, n)
    even = phi1.class_tag == EVEN_CONVEX and phi2.class_tag == EVEN_CONVEX
    nondec = phi1.class_tag == NONDECREASING_CONVEX and phi2.class_tag == NONDECREASING_CONVEX
    return classify_samples(
        x, phi1.value(x), phi1.deriv1(x), phi2.value(x), phi2.deriv1(x), even, nondec, tol
    )


def validate_pair(phi1, phi2, lo=-30.0, hi=30.0, n=6001, tol=1e-9):
    """Return ``"F1"``, ``"F2"``, ``"both"`` or ``"neither"``."""
    return classify_pair(phi1, phi2, lo, hi, n, tol).label


# --------------------------------------------------------------------------
# piecewise-linear minorant


def derivative_bound(phis, r, step=1e-3):
    """Smallest integer dominating ``max |phi'|`` on ``[-r, r]`` (sampled), at least 1."""
    x = np.arange(-r, r + step / 2, step)
    top = max(float(np.max(np.abs(p.deriv1(x)))) for p in phis)
    return max(1, math.ceil(top - 1e-12))


@dataclass(frozen=True, eq=False)
class PiecewiseLinearApprox:
    knots: np.ndarray
    knot_values: np.ndarray
    slopes: np.ndarray  # left tail, secants..., right tail
    r: int
    T_r: int
    eps_r: float
    class_tag: str = NO_CLASS
    source_name: str = ""

    @property
    def kinks(self):
        """Slope jump at each knot."""
        return np.diff(self.slopes)

    def _segment(self, x):
        seg = np.searchsorted(self.knots, x, side="left")
        base = np.clip(seg - 1, 0, len(self.knots) - 1)
        return seg, base

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        seg, base = self._segment(x)
        return self.knot_values[base] + self.slopes[seg] * (x - self.knots[base])

    def deriv(self, x):
        """Left derivative (segments are ``(q_p, q_{p+1}]``)."""
        seg, _ = self._segment(np.asarray(x, dtype=float))
        return self.slopes[seg]


def build_piecewise(phi, r, T_r=None):
    """Secant/supporting-line minorant of ``phi - 2/r`` on the partition ``p/(r T_r)``."""
    r = check_positive_int(r, "r")
    probe = np.linspace(-max(50.0, 2.0 * r), max(50.0, 2.0 * r), 20001)
    if np.min(phi.deriv2(probe)) < -1e-9:
        raise PreconditionError(f"{phi.name} is not convex")
    T = derivative_bound([phi], r) if T_r is None else check_positive_int(T_r, "T_r")
    P = r * r * T
    knots = np.arange(-P, P + 1) / (r * T)
    knots[0], knots[-1] = -float(r), float(r)
    vals = phi.value(knots) - 2.0 / r
    secants = np.diff(vals) / np.diff(knots)
    slopes = np.concatenate([[float(phi.deriv1(-float(r)))], secants, [float(phi.deriv1(float(r)))]])
    return PiecewiseLinearApprox(
        knots, vals, slopes, r, T, 1.0 / (2 * r * T), phi.class_tag, phi.name
    )


# --------------------------------------------------------------------------
# mollification

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _bump_raw(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    out = np.zeros_like(u)
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@lru_cache(maxsize=None)
def bump_mass():
    """``int_{-1}^{1} exp(-1/(1-u^2)) du``."""
    half, _ = _adaptive_quad(lambda u: float(_bump_raw(u)), 0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    return 2.0 * half


def bump(u):
    """Unit-mass symmetric bump supported on ``[-1, 1]``."""
    return _bump_raw(u) / bump_mass()


def _bump_partial(v):
    """``(int_{-1}^{-|v|} eta, int_{-1}^{-|v|} w eta(w) dw)`` by Gauss-Legendre."""
    upper = -np.abs(np.asarray(v, dtype=float))
    half = 0.5 * (upper + 1.0)
    w = half[..., None] * (_GL_NODES + 1.0) - 1.0
    e = bump(w)
    return (half[..., None] * e) @ _GL_WEIGHTS, (half[..., None] * e * w) @ _GL_WEIGHTS


def bump_cdf(v):
    """``G(v) = int_{-1}^{v} eta``."""
    v = np.clip(np.asarray(v, dtype=float), -1.0, 1.0)
    g, _ = _bump_partial(v)
    return np.where(v > 0, 1.0 - g, g)


def bump_first_moment(v):
    """``H(v) = int_{-1}^{v} w eta(w) dw`` (even in ``v``)."""
    v = np.clip(np.asarray(v, dtype=float), -1.0, 1.0)
    _, h = _bump_partial(v)
    return h


def _mollified(s):
    eps = s.eps_r
    spacing = 1.0 / (s.r * s.T_r)
    kinks = s.kinks
    n = len(s.knots)

    def nearest(x):
        k = np.clip(np.rint((x - s.knots[0]) / spacing).astype(int), 0, n - 1)
        y = x - s.knots[k]
        active = np.abs(y) < eps
        return k, y, active

    def value(x):
        x = np.asarray(x, dtype=float)
        k, y, active = nearest(x)
        v = y / eps
        ramp = eps * (v * bump_cdf(v) - bump_first_moment(v)) - np.maximum(y, 0.0)
        return s(x) + np.where(active, kinks[k] * ramp, 0.0)

    def deriv1(x):
        x = np.asarray(x, dtype=float)
        k, y, active = nearest(x)
        corr = bump_cdf(y / eps) - (y > 0)
        return s.deriv(x) + np.where(active, kinks[k] * corr, 0.0)

    def deriv2(x):
        x = np.asarray(x, dtype=float)
        k, y, active = nearest(x)
        return np.where(active, kinks[k] * bump(y / eps) / eps, 0.0)

    return value, deriv1, deriv2


def mollify(s):
    """Convolve the piecewise-linear ``s`` with ``eta_r(u) = eta(u/eps_r)/eps_r``.

    The kernel support is exactly one knot spacing wide, so each ``x`` feels
    at most one kink; the convolution of a kink with the bump is available in
    closed form through the bump's CDF and first moment.
    """
    value, d1, d2 = _mollified(s)
    r, eps = s.r, s.eps_r
    M = r + eps
    a_r, a_l = float(s.slopes[-1]), float(s.slopes[0])
    # Right line: phi(r) - 2/r + phi'(r)(x - r); knot_values already carry the shift.
    tail = Tail(
        M,
        a_r,
        float(s.knot_values[-1] - a_r * s.knots[-1]),
        a_l,
        float(s.knot_values[0] - a_l * s.knots[0]),
    )
    eta_max = float(bump(0.0))
    return InitialCondition(
        f"mollified({s.source_name},r={r})",
        value,
        d1,
        d2,
        d1_bound=float(np.max(np.abs(s.slopes))),
        d2_bound=float(np.max(s.kinks)) * eta_max / eps,
        class_tag=s.class_tag,
        tail=tail,
    )


def mollify_pair(phi1, phi2, r):
    """Mollified approximants of a pair on a shared partition (common ``T_r``)."""
    T = derivative_bound([phi1, phi2], r)
    return mollify(build_piecewise(phi1, r, T)), mollify(build_piecewise(phi2, r, T))
