"""Sign structure behind the mixture inequality for constant-``m`` solutions.

For a pair ``(phi1, phi2)``, ``0 < m1 <= m2`` and ``alpha`` in ``[0, 1]`` put
``n = alpha m1 + (1 - alpha) m2``, ``phi = alpha phi1 + (1 - alpha) phi2`` and

    F = F_{phi,n} - alpha F_{phi1,m1} - (1 - alpha) F_{phi2,m2}.

Each component solves ``dF/dt = (F_xx + m F_x**2) / 2``, so

    2 F_t = Delta_1 + Delta_2,   Delta_1 = F_xx,
    Delta_2 = n G**2 - alpha m1 F1_x**2 - (1 - alpha) m2 F2_x**2,

with ``G = alpha F1_x + (1 - alpha) F2_x``. At a critical point of ``F``
(``F0_x = G``) the second piece factors as
``(F1_x - F2_x)(c1 F1_x - c2 F2_x)``.
"""

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import PreconditionError
from ..functional import parallel_map
from ..initial import EVEN_CONVEX, combine, validate_pair
from ..pde import constant_m_solution, dx, dxx

EPS_GRAD = 1e-3
EPS = 1e-6
EPS_T = 1e-5


def coefficients(alpha, m1, m2):
    """``(n, c1, c2)`` with ``c1 = alpha (n alpha - m1)`` and ``c2 = (1 - alpha)(n (1 - alpha) - m2)``."""
    n = alpha * m1 + (1.0 - alpha) * m2
    return n, alpha * (n * alpha - m1), (1.0 - alpha) * (n * (1.0 - alpha) - m2)


@dataclass(frozen=True)
class _Component:
    F: np.ndarray
    Fx: np.ndarray
    Fxx: np.ndarray

    def Ft(self, m):
        return 0.5 * (self.Fxx + m * self.Fx * self.Fx)


def _component(phi, m, xs, t, rule):
    return _Component(
        np.asarray(constant_m_solution(phi, m, xs, t, rule)),
        np.asarray(dx(phi, m, xs, t, rule)),
        np.asarray(dxx(phi, m, xs, t, rule)),
    )


@dataclass
class MaxPrincipleReport:
    alpha: float
    m1: float
    m2: float
    n: float
    c1: float
    c2: float
    max_F: float
    records: list = field(default_factory=list)
    eps_grad: float = EPS_GRAD
    eps: float = EPS
    eps_t: float = EPS_T
    F_tol: float = 1e-7

    @property
    def violations(self):
        """Recorded points where ``F_t > eps_t`` or ``Delta_2 > eps``."""
        return [r for r in self.records if r["Ft"] > self.eps_t or r["delta2"] > self.eps]

    @property
    def n_violations(self):
        return len(self.violations)

    @property
    def coefficients_ok(self):
        interior = 0.0 < self.alpha < 1.0 and self.m2 > 0
        return (self.c2 < 0 or not interior) and self.c1 >= self.c2

    @property
    def passed(self):
        return self.n_violations == 0 and self.coefficients_ok and self.max_F <= self.F_tol

    def rows(self):
        return list(self.records)

    def summary_line(self):
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} alpha={self.alpha:g} m1={self.m1:g} m2={self.m2:g} c1={self.c1:.6g} c2={self.c2:.6g} "
            f"max_F={self.max_F:.3e} near_critical={len(self.records)} violations={self.n_violations}"
        )


def max_principle_scan(phi1, phi2, m1, m2, alpha, xs, ts, rule=None, eps_grad=EPS_GRAD, eps=EPS, eps_t=EPS_T, check=True):
    """Scan ``F`` over ``xs x ts`` and record its near-critical points.

    A point is near-critical when ``|F_x| <= eps_grad``, ``F_xx <= eps`` and
    ``F >= -eps``. ``F_t`` comes from the equation, not from time differences.
    """
    if not 0.0 < m1 <= m2 <= 1.0:
        raise PreconditionError(f"need 0 < m1 <= m2 <= 1, got m1={m1}, m2={m2}")
    if not 0.0 <= alpha <= 1.0:
        raise PreconditionError(f"alpha={alpha} outside [0, 1]")
    if check and phi1 is not phi2 and validate_pair(phi1, phi2) not in ("F1", "F2", "both"):
        raise PreconditionError(f"({phi1.name}, {phi2.name}) is not an admissible pair")
    n, c1, c2 = coefficients(alpha, m1, m2)
    phi0 = phi1 if phi1 is phi2 else combine(alpha, phi1, phi2)
    xs = np.asarray(xs, dtype=float)

    def at_time(t):
        p0 = _component(phi0, n, xs, t, rule)
        p1 = _component(phi1, m1, xs, t, rule)
        p2 = _component(phi2, m2, xs, t, rule)
        F = p0.F - alpha * p1.F - (1 - alpha) * p2.F
        Fx = p0.Fx - alpha * p1.Fx - (1 - alpha) * p2.Fx
        Fxx = p0.Fxx - alpha * p1.Fxx - (1 - alpha) * p2.Fxx
        Ft = p0.Ft(n) - alpha * p1.Ft(m1) - (1 - alpha) * p2.Ft(m2)
        G = alpha * p1.Fx + (1 - alpha) * p2.Fx
        delta2 = n * G * G - alpha * m1 * p1.Fx**2 - (1 - alpha) * m2 * p2.Fx**2
        factored = (p1.Fx - p2.Fx) * (c1 * p1.Fx - c2 * p2.Fx)
        recs = []
        near = (np.abs(Fx) <= eps_grad) & (Fxx <= eps) & (F >= -eps)
        for i in np.where(near)[0]:
            recs.append(
                {
                    "x": float(xs[i]),
                    "t": float(t),
                    "F": float(F[i]),
                    "Fx": float(Fx[i]),
                    "Fxx": float(Fxx[i]),
                    "Ft": float(Ft[i]),
                    "delta1": float(Fxx[i]),
                    "delta2": float(delta2[i]),
                    "delta2_factored": float(factored[i]),
                    "c1": c1,
                    "c2": c2,
                }
            )
        return float(np.max(F)), recs

    results = parallel_map(at_time, [float(t) for t in ts])
    records = [r for _, recs in results for r in recs]
    max_F = max(m for m, _ in results)
    return MaxPrincipleReport(alpha, m1, m2, n, c1, c2, max_F, records, eps_grad, eps, eps_t)


@dataclass
class MixtureReport:
    """Largest excess of ``F_{phi,n}`` over the mixture, and derivative ordering."""

    max_excess: float
    max_deriv_excess: float
    pair_class: str
    grid_shape: tuple

    def passed(self, tol=1e-8):
        return self.max_excess <= tol and self.max_deriv_excess <= tol


def mixture_check(phi1, phi2, m1, m2, alpha, xs, ts, rule=None):
    """``F_{phi,n} - alpha F1 - (1 - alpha) F2`` and ``F1_x - F2_x`` over a grid.

    The derivative excess is taken over ``xs >= 0`` for even pairs (their
    derivatives are odd, so the ordering flips on the left) and over all
    ``xs`` otherwise.
    """
    label = validate_pair(phi1, phi2) if phi1 is not phi2 else "same"
    if label == "neither":
        raise PreconditionError(f"({phi1.name}, {phi2.name}) is not an admissible pair")
    if not 0.0 < m1 <= m2 <= 1.0:
        raise PreconditionError(f"need 0 < m1 <= m2 <= 1, got m1={m1}, m2={m2}")
    n = alpha * m1 + (1.0 - alpha) * m2
    phi0 = phi1 if phi1 is phi2 else combine(alpha, phi1, phi2)
    xs = np.asarray(xs, dtype=float)
    mask = xs >= 0 if phi1.class_tag == EVEN_CONVEX else np.ones_like(xs, dtype=bool)
    excess, dexcess = -np.inf, -np.inf
    for t in ts:
        F0 = np.asarray(constant_m_solution(phi0, n, xs, t, rule))
        F1 = np.asarray(constant_m_solution(phi1, m1, xs, t, rule))
        F2 = np.asarray(constant_m_solution(phi2, m2, xs, t, rule))
        excess = max(excess, float(np.max(F0 - alpha * F1 - (1 - alpha) * F2)))
        d = np.asarray(dx(phi1, m1, xs, t, rule)) - np.asarray(dx(phi2, m2, xs, t, rule))
        dexcess = max(dexcess, float(np.max(d[mask])))
    return MixtureReport(excess, dexcess, label, (len(xs), len(ts)))
