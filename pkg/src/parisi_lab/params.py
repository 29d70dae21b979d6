"""Step functional order parameters on ``[0, 1]``.

A :class:`StepParam` with breakpoints ``t_1 < ... < t_k`` and values
``m_0, ..., m_k`` is the left-continuous function equal to ``m_0`` on
``[0, t_1]`` and to ``m_j`` on ``(t_j, t_{j+1}]`` (``t_{k+1} = 1``).
"""

import json
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array, check_unit_interval, scalar_or_array
from .exceptions import DomainError, PreconditionError

MERGE_TOL = 1e-12


def _normalise(breakpoints, values):
    bps = [float(t) for t in breakpoints]
    vals = [float(v) for v in values]
    if len(vals) != len(bps) + 1:
        raise DomainError(
            f"need len(values) == len(breakpoints) + 1, got {len(vals)} and {len(bps)}"
        )
    for v in vals:
        if not (0.0 <= v <= 1.0):
            raise DomainError(f"value {v!r} outside [0, 1]")
    for t in bps:
        if not (0.0 <= t <= 1.0):
            raise DomainError(f"breakpoint {t!r} outside [0, 1]")
    if any(b < a for a, b in zip(bps, bps[1:])):
        raise DomainError("breakpoints must be increasing")

    # Drop zero-length intervals: the interval (t_{j-1}, t_j] disappears when
    # t_j merges with its left neighbour (or with 0).
    out_b, out_v = [], [vals[0]]
    for t, v in zip(bps, vals[1:]):
        left = out_b[-1] if out_b else 0.0
        if t - left <= MERGE_TOL:
            out_v[-1] = v
            continue
        out_b.append(t)
        out_v.append(v)
    # A breakpoint at 1 leaves a zero-length final interval.
    while out_b and 1.0 - out_b[-1] <= MERGE_TOL:
        out_b.pop()
        out_v.pop()
    return tuple(out_b), tuple(out_v)


@dataclass(frozen=True)
class StepParam:
    breakpoints: tuple = ()
    values: tuple = (0.0,)

    def __post_init__(self):
        b, v = _normalise(self.breakpoints, self.values)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, m):
        return cls((), (m,))

    @property
    def k(self):
        """Number of breakpoints."""
        return len(self.breakpoints)

    @property
    def grid(self):
        """``(0, t_1, ..., t_k, 1)`` as a tuple."""
        return (0.0,) + self.breakpoints + (1.0,)

    @property
    def in_M(self):
        """True iff the values are nonincreasing."""
        return all(b <= a for a, b in zip(self.values, self.values[1:]))

    def intervals(self):
        """Yield ``(t_lo, t_hi, m)`` for each interval."""
        g = self.grid
        return [(g[j], g[j + 1], self.values[j]) for j in range(len(self.values))]

    def __call__(self, t):
        return evaluate(self, t)

    def integral(self):
        g = np.diff(self.grid)
        return float(np.dot(g, self.values))

    def reversed(self):
        """The step function ``t -> a(1 - t)`` (orientation flip).

        The flipped function is right-continuous at its breakpoints; as an
        element of L1 it is represented with the same interval convention.
        """
        return StepParam(tuple(1.0 - t for t in reversed(self.breakpoints)), self.values[::-1])

    def on(self, breakpoints):
        """Rewrite on a finer breakpoint set containing ``self.breakpoints``."""
        bps = tuple(sorted(float(t) for t in breakpoints))
        g = (0.0,) + bps + (1.0,)
        # Interval value is the value at any interior point, e.g. the midpoint.
        mids = [0.5 * (g[j] + g[j + 1]) for j in range(len(g) - 1)]
        vals = evaluate(self, np.array(mids))
        obj = object.__new__(StepParam)
        object.__setattr__(obj, "breakpoints", bps)
        object.__setattr__(obj, "values", tuple(float(v) for v in vals))
        return obj

    def simplified(self):
        """Remove breakpoints between equal neighbouring values."""
        b, v = [], [self.values[0]]
        for t, m in zip(self.breakpoints, self.values[1:]):
            if m == v[-1]:
                continue
            b.append(t)
            v.append(m)
        return StepParam(tuple(b), tuple(v))

    def to_dict(self):
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(tuple(d.get("breakpoints", ())), tuple(d["values"]))
        except (KeyError, TypeError, AttributeError) as exc:
            raise DomainError(f"malformed step parameter {d!r}") from exc

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def evaluate(a, t):
    """Left-continuous value ``a(t)``; ``a(0) = m_0``."""
    arr = as_float_array(t, "t")
    if np.any((arr < 0.0) | (arr > 1.0)):
        raise DomainError(f"t must lie in [0, 1], got {t!r}")
    idx = np.searchsorted(np.asarray(a.breakpoints, dtype=float), arr, side="left")
    out = np.asarray(a.values, dtype=float)[idx]
    return scalar_or_array(t, out)


def common_breakpoints(*params):
    merged = sorted(set().union(*(p.breakpoints for p in params)))
    out = []
    for t in merged:
        if out and t - out[-1] <= MERGE_TOL:
            continue
        out.append(t)
    return tuple(out)


def refine_pair(a1, a2):
    """Both parameters rewritten on the union of their breakpoints."""
    bps = common_breakpoints(a1, a2)
    return a1.on(bps), a2.on(bps)


def convex_combination(alpha, a1, a2):
    """The step parameter ``alpha*a1 + (1 - alpha)*a2``."""
    alpha = check_unit_interval(alpha, "alpha")
    r1, r2 = refine_pair(a1, a2)
    vals = [
        min(1.0, max(0.0, alpha * u + (1.0 - alpha) * v))
        for u, v in zip(r1.values, r2.values)
    ]
    obj = object.__new__(StepParam)
    object.__setattr__(obj, "breakpoints", r1.breakpoints)
    object.__setattr__(obj, "values", tuple(vals))
    return obj


def l1_distance(a1, a2):
    """Exact ``int_0^1 |a1 - a2| dt``."""
    r1, r2 = refine_pair(a1, a2)
    widths = np.diff(r1.grid)
    return float(np.dot(widths, np.abs(np.subtract(r1.values, r2.values))))


def penalty_integral(a):
    """Exact ``int_0^1 t * a(1 - t) dt`` (no ``beta**2 / 2`` factor).

    With ``s = 1 - t`` this is ``int_0^1 (1 - s) a(s) ds``.
    """
    g = np.asarray(a.grid)
    lo, hi = g[:-1], g[1:]
    per = (hi - lo) - 0.5 * (hi**2 - lo**2)
    return float(np.dot(per, a.values))


def dominance_witness(a1, a2, tol=0.0):
    """Return a ``t`` with ``a1(t) > a2(t) + tol``, or ``None`` if ``a1 <= a2``."""
    r1, r2 = refine_pair(a1, a2)
    g = r1.grid
    for j, (u, v) in enumerate(zip(r1.values, r2.values)):
        if u > v + tol:
            return g[j + 1] if j > 0 else 0.0
    return None


def check_ordered(a1, a2, tol=0.0):
    t = dominance_witness(a1, a2, tol)
    if t is not None:
        raise PreconditionError(
            f"a1 <= a2 fails at t={t:.6g}: a1(t)={evaluate(a1, t):.6g} > a2(t)={evaluate(a2, t):.6g}"
        )


def random_step_param(rng, max_breaks=3, monotone=True, min_gap=0.02):
    """Random step parameter; nonincreasing values when ``monotone``."""
    k = int(rng.integers(0, max_breaks + 1))
    while True:
        bps = np.sort(rng.uniform(0.0, 1.0, size=k))
        g = np.concatenate([[0.0], bps, [1.0]])
        if k == 0 or np.diff(g).min() > min_gap:
            break
    vals = rng.uniform(0.0, 1.0, size=k + 1)
    if monotone:
        vals = np.sort(vals)[::-1]
    return StepParam(tuple(bps), tuple(vals))
