"""Solver for ``dF/dt = (F_xx + a(t) F_x**2) / 2`` with ``F(., 0) = phi``.

On an interval ``(t_j, t_{j+1}]`` where ``a = m_j`` the Hopf-Cole substitution
linearises the equation, and the solution is one Gaussian smoothing step::

    F(x, t) = (1/m_j) log E exp(m_j F(x + sqrt(t - t_j) z, t_j)).

Snapshots are stored on a uniform grid together with ``F_x`` (propagated
through the Gibbs-weighted average ``F_x(x, t) = E[F_x(y) W(y)]``), so the
interpolant between grid points is a cubic Hermite spline with accurate
slopes. Outside the grid each snapshot is continued by its linear tails; a
smoothing step keeps a tail's slope ``A`` and raises its intercept by
``A**2 m dt / 2``.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_array, check_nonnegative, check_unit_interval, scalar_or_array
from .exceptions import DomainError, NonFiniteError, TailInconsistencyError
from .initial import InitialCondition, classify_samples
from .params import StepParam
from .quad import (
    SQRT2,
    gibbs_weights,
    hermite_rule,
    log_moment,
    log_moment_from_values,
    sample_nodes,
)

SPLICE_TOL = 1e-2
TAIL_FIT_FRACTION = 0.1


@dataclass(frozen=True)
class LinearTail:
    A: float
    B: float

    def __call__(self, x):
        return self.A * np.asarray(x, dtype=float) + self.B

    def advanced(self, m, dt):
        return LinearTail(self.A, self.B + 0.5 * self.A * self.A * m * dt)


def limit_slopes(values, slopes, h):
    """Fritsch-Carlson safeguard on intervals where the data are monotone.

    Slopes are only shrunk, never replaced, so accurate derivative data passes
    through untouched unless it would make a monotone cell overshoot.
    """
    d = np.array(slopes, dtype=float)
    delta = np.diff(values) / h
    same = delta[:-1] * delta[1:] > 0
    interior = d[1:-1]
    interior[same & (interior * delta[1:] < 0)] = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        a = d[:-1] / delta
        b = d[1:] / delta
    rad = a * a + b * b
    mono = (delta != 0) & (a >= 0) & (b >= 0)
    tau = np.where(mono & (rad > 9.0), 3.0 / np.sqrt(np.where(rad > 0, rad, 1.0)), 1.0)
    scale = np.ones_like(d)
    scale[:-1] = np.minimum(scale[:-1], tau)
    scale[1:] = np.minimum(scale[1:], tau)
    return d * scale


@dataclass(frozen=True, eq=False)
class GridFunction:
    """``F(., t)`` on a uniform grid with linear continuation on both sides."""

    x_min: float
    x_max: float
    values: np.ndarray
    slopes: np.ndarray
    t: float
    tail_left: LinearTail
    tail_right: LinearTail
    exact: Optional[InitialCondition] = None
    interpolation: str = "hermite"

    def __post_init__(self):
        if self.interpolation == "pchip":
            from scipy.interpolate import PchipInterpolator

            object.__setattr__(self, "_pchip", PchipInterpolator(self.x, self.values))
        elif self.interpolation == "hermite":
            object.__setattr__(self, "_slopes_used", limit_slopes(self.values, self.slopes, self.h))
        else:
            raise DomainError(f"unknown interpolation {self.interpolation!r}")

    @property
    def n(self):
        return len(self.values)

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.n)

    def splice_mismatch(self):
        return max(
            abs(self.values[-1] - self.tail_right(self.x_max)),
            abs(self.values[0] - self.tail_left(self.x_min)),
        )

    def _inside(self, x):
        if self.interpolation == "pchip":
            return self._pchip(x), self._pchip(x, 1)
        h = self.h
        u = (x - self.x_min) / h
        i = np.clip(np.floor(u).astype(np.intp), 0, self.n - 2)
        s = u - i
        y0, y1 = self.values[i], self.values[i + 1]
        d0, d1 = self._slopes_used[i] * h, self._slopes_used[i + 1] * h
        s2 = s * s
        one = 1.0 - s
        val = (1 + 2 * s) * one * one * y0 + s * one * one * d0 + s2 * (3 - 2 * s) * y1 + s2 * (s - 1) * d1
        der = ((6 * s2 - 6 * s) * (y0 - y1) + (3 * s2 - 4 * s + 1) * d0 + (3 * s2 - 2 * s) * d1) / h
        return val, der

    def _evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if self.exact is not None:
            return self.exact.value(x), self.exact.deriv1(x)
        inner = np.clip(x, self.x_min, self.x_max)
        val, der = self._inside(inner)
        right, left = x > self.x_max, x < self.x_min
        val = np.where(right, self.tail_right(x), np.where(left, self.tail_left(x), val))
        der = np.where(right, self.tail_right.A, np.where(left, self.tail_left.A, der))
        return val, der

    def __call__(self, x):
        return scalar_or_array(x, self._evaluate(x)[0])

    value = __call__

    def deriv1(self, x):
        return scalar_or_array(x, self._evaluate(x)[1])

    def both(self, x):
        return self._evaluate(x)

    def rows(self):
        """One ``{t, x, F, Fx}`` dict per grid point."""
        x = self.x
        v, d = self._evaluate(x)
        return [{"t": self.t, "x": float(a), "F": float(b), "Fx": float(c)} for a, b, c in zip(x, v, d)]


@dataclass(frozen=True, eq=False)
class SolveTrace:
    """Snapshots at ``0 = t_0 < t_1 < ... < t_{k+1} = 1``."""

    snapshots: tuple
    a: StepParam
    phi: InitialCondition
    rule: object

    @property
    def times(self):
        return tuple(s.t for s in self.snapshots)

    @property
    def final(self):
        return self.snapshots[-1]

    def _interval(self, t):
        t = check_unit_interval(t, "t")
        times = np.asarray(self.a.grid)
        if t == 0.0:
            return None
        j = int(np.searchsorted(times, t, side="left")) - 1
        if j >= len(self.snapshots):
            raise DomainError(f"trace stops at t={self.times[-1]}, asked for t={t}")
        return j

    def evaluate(self, x, t=1.0):
        """``F(x, t)`` by one partial smoothing step from the last snapshot before ``t``."""
        j = self._interval(t)
        if j is None:
            return self.snapshots[0](x)
        base = self.snapshots[j]
        m = self.a.values[j]
        return log_moment(self.rule, base.value, x, math.sqrt(t - base.t), m)

    def dx(self, x, t=1.0, step=None):
        """Central difference of :meth:`evaluate` in ``x``."""
        step = self.snapshots[0].h if step is None else step
        x = np.asarray(x, dtype=float)
        return (self.evaluate(x + step, t) - self.evaluate(x - step, t)) / (2 * step)

    def dxx(self, x, t=1.0, step=None):
        step = self.snapshots[0].h if step is None else step
        x = np.asarray(x, dtype=float)
        return (self.evaluate(x + step, t) - 2 * self.evaluate(x, t) + self.evaluate(x - step, t)) / step**2


# --------------------------------------------------------------------------


def _fit_tail(x, v, side):
    k = max(2, int(round(TAIL_FIT_FRACTION * len(x))))
    xs, vs = (x[-k:], v[-k:]) if side == "right" else (x[:k], v[:k])
    A, B = np.polyfit(xs, vs, 1)
    return LinearTail(float(A), float(B))


def _initial_snapshot(phi, x_min, x_max, n, interpolation):
    x = np.linspace(x_min, x_max, n)
    values = np.asarray(phi.value(x), dtype=float)
    slopes = np.asarray(phi.deriv1(x), dtype=float)
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(slopes))):
        raise NonFiniteError(f"{phi.name} is not finite on the grid")
    tail = phi.tail
    if tail is not None and tail.M <= min(x_max, -x_min):
        right = LinearTail(tail.A_right, tail.B_right)
        left = LinearTail(tail.A_left, tail.B_left)
    else:
        right, left = _fit_tail(x, values, "right"), _fit_tail(x, values, "left")
    snap = GridFunction(x_min, x_max, values, slopes, 0.0, left, right, phi, interpolation)
    _check_splice(snap)
    return snap


def _check_splice(snap):
    gap = snap.splice_mismatch()
    if not gap <= SPLICE_TOL:
        raise TailInconsistencyError(f"tail splice mismatch {gap:.3g} at t={snap.t:.6g}")


def smoothing_step(prev, m, dt, rule):
    """Advance a snapshot by ``dt`` with constant ``a = m``."""
    sigma = math.sqrt(dt)
    x = prev.x
    points = x[:, None] + (SQRT2 * sigma) * rule.nodes
    vals, ders = prev.both(points)
    if not np.all(np.isfinite(vals)):
        where = tuple(np.argwhere(~np.isfinite(vals))[0])
        raise NonFiniteError(f"non-finite snapshot value at node {where[-1]}", node=int(where[-1]))
    pw = rule.prob_weights
    values = log_moment_from_values(vals, m, pw)
    slopes = np.sum(gibbs_weights(vals, m, pw) * ders, axis=-1)
    snap = GridFunction(
        prev.x_min,
        prev.x_max,
        values,
        slopes,
        prev.t + dt,
        prev.tail_left.advanced(m, dt),
        prev.tail_right.advanced(m, dt),
        None,
        prev.interpolation,
    )
    _check_splice(snap)
    return snap


class ParisiSolver(BaseEstimator):
    """Grid solver for the Parisi PDE with step-function ``a``.

    Parameters
    ----------
    x_min, x_max : float
        Grid extent.
    h : float
        Target grid spacing; the actual spacing divides ``x_max - x_min``.
    order : int
        Gauss-Hermite order.
    interpolation : {"hermite", "pchip"}
        ``"hermite"`` uses the propagated slopes with a monotonicity
        safeguard; ``"pchip"`` uses values only.

    After :meth:`fit`, ``trace_`` holds the snapshots.
    """

    def __init__(self, x_min=-16.0, x_max=16.0, h=0.02, order=60, interpolation="hermite"):
        self.x_min = x_min
        self.x_max = x_max
        self.h = h
        self.order = order
        self.interpolation = interpolation

    def _grid(self):
        if not self.x_min < self.x_max:
            raise DomainError("x_min must be smaller than x_max")
        if not self.h > 0:
            raise DomainError("h must be positive")
        n = int(round((self.x_max - self.x_min) / self.h)) + 1
        if n < 64:
            raise DomainError(f"grid has {n} points; need at least 64")
        return n

    @property
    def rule(self):
        return hermite_rule(self.order)

    def propagate(self, phi, a, upto=None):
        """Snapshots at ``a.grid[:upto + 1]`` (all of them by default)."""
        n = self._grid()
        rule = self.rule
        snaps = [_initial_snapshot(phi, float(self.x_min), float(self.x_max), n, self.interpolation)]
        stop = len(a.values) if upto is None else upto
        for (lo, hi, m) in a.intervals()[:stop]:
            snaps.append(smoothing_step(snaps[-1], m, hi - lo, rule))
        return SolveTrace(tuple(snaps), a, phi, rule)

    def fit(self, phi, a):
        self.trace_ = self.propagate(phi, a)
        return self

    def predict(self, x, t=1.0):
        """``F(x, t)`` from the fitted trace."""
        check_is_fitted(self, "trace_")
        return self.trace_.evaluate(as_float_array(x), t)

    def refined(self, factor=2):
        """Same solver with ``h / factor`` and ``order * factor``."""
        return ParisiSolver(self.x_min, self.x_max, self.h / factor, self.order * factor, self.interpolation)


def solve(phi, a, solver=None):
    """Full :class:`SolveTrace` for ``(phi, a)``."""
    solver = ParisiSolver() if solver is None else solver
    return solver.propagate(phi, a)


def terminal_value(phi, a, x, solver=None):
    """``F(x, 1)``; skips the last on-grid step and evaluates it pointwise."""
    solver = ParisiSolver() if solver is None else solver
    trace = solver.propagate(phi, a, upto=len(a.values) - 1)
    lo, _, m = a.intervals()[-1]
    base = trace.snapshots[-1]
    return log_moment(trace.rule, base.value, x, math.sqrt(1.0 - lo), m)


# --------------------------------------------------------------------------
# constant-m closed form and derivative formulas


def constant_m_solution(phi, m, x, t, rule=None):
    """``(1/m) log E exp(m phi(x + sqrt(t) z))`` (``m = 0``: ``E phi``)."""
    check_unit_interval(m, "m")
    check_unit_interval(t, "t")
    return log_moment(hermite_rule() if rule is None else rule, phi.value, x, math.sqrt(t), m)


def _gibbs_moments(phi, m, x, t, rule, second=False):
    rule = hermite_rule() if rule is None else rule
    m = check_unit_interval(m, "m")
    t = check_nonnegative(t, "t")
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        d1 = np.asarray(phi.deriv1(x), dtype=float)
        d2 = np.asarray(phi.deriv2(x), dtype=float) if second else None
        return x, d1, (d1 * d1 if second else None), d2
    points, vals = sample_nodes(rule, phi.value, x, math.sqrt(t))
    W = gibbs_weights(vals, m, rule.prob_weights)
    d1 = np.asarray(phi.deriv1(points), dtype=float)
    e1 = np.sum(W * d1, axis=-1)
    if not second:
        return x, e1, None, None
    e11 = np.sum(W * d1 * d1, axis=-1)
    e2 = np.sum(W * np.asarray(phi.deriv2(points), dtype=float), axis=-1)
    return x, e1, e11, e2


def dx(phi, m, x, t, rule=None):
    """``F_x = E[phi'(x + sqrt(t) z) W]`` with Gibbs weight ``W = e^{m phi}/E e^{m phi}``."""
    xx, e1, _, _ = _gibbs_moments(phi, m, x, t, rule)
    return scalar_or_array(x, e1)


def dxx(phi, m, x, t, rule=None):
    """``F_xx = E[phi'' W] + m (E[phi'^2 W] - E[phi' W]^2)``."""
    _, e1, e11, e2 = _gibbs_moments(phi, m, x, t, rule, second=True)
    return scalar_or_array(x, e2 + m * (e11 - e1 * e1))


def snapshot_pair_class(g1, g2, lo=-30.0, hi=30.0, tol=1e-7):
    """Pair class of two snapshots, judged on their common grid points in ``[lo, hi]``.

    Evenness and monotonicity are read off the sampled values and slopes.
    """
    x = g1.x
    x = x[(x >= lo) & (x <= hi)]
    v1, d1 = g1.both(x)
    v2, d2 = g2.both(x)
    even = all(np.max(np.abs(g(x) - g(-x))) <= tol for g in (g1, g2))
    nondec = bool(np.all(d1 >= -tol) and np.all(d2 >= -tol))
    return classify_samples(x, v1, d1, v2, d2, even, nondec, tol).label


# --------------------------------------------------------------------------
# oracle and residual


def nested_solution(phi, a, x, rule=None):
    """``F(x, 1)`` by composing the smoothing steps exactly (no grid).

    Cost grows like ``order ** (k + 1)``; meant as a reference for few steps.
    """
    rule = hermite_rule(200) if rule is None else rule
    steps = a.intervals()
    if len(steps) > 3:
        raise DomainError("nested evaluation is limited to at most two breakpoints")

    def level(j):
        if j == 0:
            return phi.value
        lo, hi, m = steps[j - 1]
        inner = level(j - 1)
        return lambda y: log_moment(rule, inner, y, math.sqrt(hi - lo), m)

    return level(len(steps))(x)


_D1 = (np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0, np.array([-2, -1, 0, 1, 2]))
_D2 = (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0, np.array([-2, -1, 0, 1, 2]))


def pde_residual(trace, samples, x_step=None, t_step=None):
    """Max of ``|F_t - (F_xx + a(t) F_x^2)/2|`` over ``samples`` of ``(x, t)``.

    Derivatives use fourth-order central differences; the ``x`` step defaults
    to the grid spacing and the ``t`` step to a tenth of the shortest
    interval, shrunk as needed to stay inside the sample's interval.
    """
    grid = trace.a.grid
    hx = trace.snapshots[0].h if x_step is None else x_step
    ht = min(np.diff(grid)) / 10.0 if t_step is None else t_step
    worst = 0.0
    for x, t in samples:
        j = int(np.searchsorted(grid, t, side="left")) - 1
        lo, hi = grid[j], grid[j + 1]
        if not lo < t < hi:
            raise DomainError(f"sample t={t} is not strictly inside an interval")
        dt = min(ht, (t - lo) / 2.5, (hi - t) / 2.5)
        m = trace.a.values[j]
        fx = trace.evaluate(x + hx * _D1[1], t)
        ft = np.array([trace.evaluate(x, t + dt * s) for s in _D1[1]])
        F_x = _D1[0] @ fx / hx
        F_xx = _D2[0] @ fx / hx**2
        F_t = _D1[0] @ ft / dt
        worst = max(worst, abs(F_t - 0.5 * (F_xx + m * F_x * F_x)))
    return float(worst)
