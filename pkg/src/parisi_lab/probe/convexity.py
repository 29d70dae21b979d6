"""Convexity gaps of ``a -> F_{phi,a}(x, 1)`` along segments of step parameters."""

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import PreconditionError
from ..functional import parallel_map
from ..initial import EVEN_CONVEX, NONDECREASING_CONVEX, combine, validate_pair
from ..params import check_ordered, convex_combination, l1_distance
from ..pde import ParisiSolver, constant_m_solution, terminal_value

DEFAULT_TOL = 1e-7


@dataclass
class ConvexityReport:
    """Gaps ``alpha P(a1) + (1 - alpha) P(a2) - P(alpha a1 + (1 - alpha) a2)``.

    ``gaps[i, j]`` belongs to ``(alphas[i], xs[j])``. ``candidates`` lists
    negative gaps that survived re-evaluation with a refined solver.
    """

    alphas: np.ndarray
    xs: np.ndarray
    gaps: np.ndarray
    tolerance: float = DEFAULT_TOL
    metadata: dict = field(default_factory=dict)
    candidates: list = field(default_factory=list)

    @property
    def min_gap(self):
        return float(np.min(self.gaps))

    @property
    def max_violation(self):
        return max(0.0, -self.min_gap)

    @property
    def passed(self):
        return not self.candidates and self.min_gap >= -self.tolerance

    def rows(self):
        return [
            {"alpha": float(a), "x": float(x), "gap": float(self.gaps[i, j])}
            for i, a in enumerate(self.alphas)
            for j, x in enumerate(self.xs)
        ]

    def summary_line(self):
        status = "PASS" if self.passed else "FAIL"
        sign = ">=" if self.min_gap >= -self.tolerance else "<"
        return (
            f"{status} min_gap={self.min_gap:.3e} {sign} -{self.tolerance:.0e} "
            f"max_violation={self.max_violation:.3e} candidates={len(self.candidates)}"
        )


def _gaps(phi1, phi2, a1, a2, alphas, xs, solver):
    p1 = np.asarray(terminal_value(phi1, a1, xs, solver))
    p2 = np.asarray(terminal_value(phi2, a2, xs, solver))

    def gap(alpha):
        phi = phi1 if phi1 is phi2 else combine(alpha, phi1, phi2)
        a = convex_combination(alpha, a1, a2)
        p = np.asarray(terminal_value(phi, a, xs, solver))
        return alpha * p1 + (1.0 - alpha) * p2 - p

    return np.array(parallel_map(gap, alphas))


def one_sided_scan(phi1, phi2, a1, a2, alphas, xs, solver=None, tolerance=DEFAULT_TOL):
    """Gap table for the mixed segment between ordered ``a1 <= a2``.

    The left-hand side uses the mixed initial condition
    ``alpha phi1 + (1 - alpha) phi2``.
    """
    check_ordered(a1, a2)
    label = None
    if phi1 is not phi2:
        label = validate_pair(phi1, phi2)
        if label not in ("F1", "F2", "both"):
            raise PreconditionError(f"({phi1.name}, {phi2.name}) is not an admissible pair")
    solver = ParisiSolver() if solver is None else solver
    alphas = np.asarray(alphas, dtype=float)
    xs = np.asarray(xs, dtype=float)
    gaps = _gaps(phi1, phi2, a1, a2, alphas, xs, solver)
    meta = {
        "kind": "one_sided",
        "phi1": phi1.name,
        "phi2": phi2.name,
        "pair_class": label,
        "a1": a1.to_dict(),
        "a2": a2.to_dict(),
        "l1_distance": l1_distance(a1, a2),
    }
    return ConvexityReport(alphas, xs, gaps, tolerance, meta)


def conjecture_scan(phi, a1, a2, alphas, xs, solver=None, tolerance=DEFAULT_TOL, refine=True):
    """Gap table along an arbitrary (possibly crossing) segment.

    Gaps below ``-tolerance`` are recomputed with ``solver.refined()``; only
    those still below ``-tolerance`` become candidates.
    """
    solver = ParisiSolver() if solver is None else solver
    alphas = np.asarray(alphas, dtype=float)
    xs = np.asarray(xs, dtype=float)
    gaps = _gaps(phi, phi, a1, a2, alphas, xs, solver)
    candidates = []
    bad_rows = np.where((gaps < -tolerance).any(axis=1))[0]
    if len(bad_rows):
        fine = solver.refined() if refine else solver
        regaps = _gaps(phi, phi, a1, a2, alphas[bad_rows], xs, fine)
        for r, i in enumerate(bad_rows):
            for j in range(len(xs)):
                if gaps[i, j] < -tolerance and regaps[r, j] < -tolerance:
                    candidates.append(
                        {"alpha": float(alphas[i]), "x": float(xs[j]), "gap": float(gaps[i, j]), "refined_gap": float(regaps[r, j])}
                    )
    meta = {
        "kind": "conjecture",
        "phi": phi.name,
        "a1": a1.to_dict(),
        "a2": a2.to_dict(),
        "l1_distance": l1_distance(a1, a2),
        "refined_rows": int(len(bad_rows)),
    }
    return ConvexityReport(alphas, xs, gaps, tolerance, meta, candidates)


@dataclass
class CurveReport:
    ms: np.ndarray
    values: np.ndarray
    second_differences: np.ndarray
    tolerance: float

    @property
    def convex(self):
        return bool(np.all(self.second_differences >= -self.tolerance))

    def rows(self):
        return [{"m": float(m), "value": float(v)} for m, v in zip(self.ms, self.values)]


def m_curve(phi, x, ms, rule=None, tolerance=1e-8):
    """The curve ``m -> (1/m) log E exp(m phi(x + z))`` and its convexity verdict."""
    if phi.class_tag not in (EVEN_CONVEX, NONDECREASING_CONVEX):
        raise PreconditionError(f"{phi.name} is neither even convex nor nondecreasing convex")
    ms = np.asarray(ms, dtype=float)
    values = np.array([constant_m_solution(phi, m, x, 1.0, rule) for m in ms])
    return CurveReport(ms, values, np.diff(values, 2), tolerance)
