"""Approach of constant-``m`` solutions to their linear asymptotes."""

from dataclasses import dataclass

import numpy as np

from ..exceptions import PreconditionError
from ..pde import constant_m_solution


@dataclass
class AsymptoticReport:
    m: float
    ts: np.ndarray
    xs: np.ndarray
    log_ratio: np.ndarray  # shape (len(ts), len(xs))

    @property
    def deviation(self):
        """``|O - 1|`` on the grid."""
        return np.abs(np.expm1(self.log_ratio))

    @property
    def max_deviation(self):
        return float(np.max(self.deviation))

    def deviation_at(self, x):
        j = int(np.argmin(np.abs(self.xs - x)))
        return float(np.max(self.deviation[:, j]))

    def rows(self):
        return [
            {"t": float(t), "x": float(x), "deviation": float(self.deviation[i, j])}
            for i, t in enumerate(self.ts)
            for j, x in enumerate(self.xs)
        ]


def asymptotic_check(phi, m, ts, xs, rule=None, tail=None):
    """Compare ``F_{phi,m}(x, t)`` with ``A x + B + A**2 m t / 2``.

    ``O = exp(F - asymptote)``; right-tail constants are used for ``x > 0``
    and left-tail constants for ``x < 0``. ``tail`` overrides ``phi.tail``.
    """
    tail = phi.tail if tail is None else tail
    if tail is None:
        raise PreconditionError(f"{phi.name} declares no tail constants")
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if np.any(xs == 0):
        raise PreconditionError("probe points must be nonzero to pick a side")
    A = np.where(xs > 0, tail.A_right, tail.A_left)
    B = np.where(xs > 0, tail.B_right, tail.B_left)
    out = np.empty((len(ts), len(xs)))
    for i, t in enumerate(ts):
        F = np.asarray(constant_m_solution(phi, m, xs, t, rule))
        out[i] = F - (A * xs + B + 0.5 * A * A * m * t)
    return AsymptoticReport(float(m), ts, xs, out)
