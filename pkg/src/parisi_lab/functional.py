"""Parisi functional, the variational value and its minimisation.

The search space for ``k`` steps is the family

    a = 1 on [0, t_1],   a = m_j on (t_j, t_{j+1}]  (j = 1..k, t_{k+1} = 1)

with ``2k`` free coordinates ``(m_1..m_k, t_1..t_k)``. It is nested in ``k``
(set ``m_k = m_{k-1}``) and its closure contains every constant parameter,
so the two constant anchors ``a = 0`` and ``a = 1`` are always evaluated.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize
from scipy.special import expit, logit
from sklearn.base import BaseEstimator

from .exceptions import DomainError
from .initial import InitialCondition, log_cosh
from .params import StepParam, l1_distance, penalty_integral
from .pde import ParisiSolver, terminal_value

LOG2 = math.log(2.0)


def n_threads():
    """Parallelism cap from ``PARISI_LAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("PARISI_LAB_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items):
    items = list(items)
    workers = min(n_threads(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ParisiProblem:
    beta: float
    h: float = 0.0
    phi: InitialCondition = field(default_factory=log_cosh)
    k: int = 1

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError("beta must be positive")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError("k must be a positive integer")

    @property
    def x(self):
        return self.beta * self.h


def parisi_functional(phi, x, a, solver=None):
    """``F_{phi,a}(x, 1)``."""
    return terminal_value(phi, a, x, solver)


def parisi_value(problem, a, solver=None):
    """``log 2 + F_a(beta h, 1) - beta**2/2 * int_0^1 t a(1-t) dt``."""
    F = parisi_functional(problem.phi, problem.x, a, solver)
    return LOG2 + F - 0.5 * problem.beta**2 * penalty_integral(a)


# --------------------------------------------------------------------------


def decode(z, monotone=True):
    """Map ``2k`` unconstrained reals to a member of the ``k``-step family."""
    z = np.asarray(z, dtype=float)
    k = len(z) // 2
    s = expit(z[:k])
    values = np.cumprod(s) if monotone else s
    p = expit(z[k:])
    t, bps = 0.0, []
    for q in p:
        t = t + (1.0 - t) * q
        bps.append(t)
    return StepParam(tuple(bps), (1.0,) + tuple(values))


def encode(a, k, monotone=True, clip=1e-9):
    """Inverse of :func:`decode` for ``a = (1, m_1..m_j)`` with ``j <= k``.

    Shorter parameters are embedded by splitting their last interval.
    """
    bps, vals = list(a.breakpoints), list(a.values)
    if not bps or vals[0] != 1.0:
        raise DomainError("encode expects a parameter whose first interval has value 1")
    while len(bps) < k:
        bps.append(0.5 * (bps[-1] + 1.0))
        vals.append(vals[-1])
    m = np.clip(np.asarray(vals[1:]), clip, 1 - clip)
    if monotone:
        ratios = m / np.concatenate([[1.0], m[:-1]])
        u = logit(np.clip(ratios, clip, 1 - clip))
    else:
        u = logit(m)
    g = np.concatenate([[0.0], bps])
    q = (g[1:] - g[:-1]) / (1.0 - g[:-1])
    return np.concatenate([u, logit(np.clip(q, clip, 1 - clip))])


@dataclass
class MinimizeResult:
    best: StepParam
    value: float
    n_iter: int
    converged: bool
    history: list
    starts: list

    def incumbent_clusters(self, value_tol=1e-6, dist_tol=1e-3):
        """Group near-optimal start incumbents by L1 distance.

        More than one cluster is evidence against a unique minimiser on the
        searched family (or of an unconverged start).
        """
        good = [p for v, p in self.starts if v <= self.value + value_tol]
        clusters = []
        for p in good:
            for c in clusters:
                if l1_distance(c[0], p) <= dist_tol:
                    c.append(p)
                    break
            else:
                clusters.append([p])
        return clusters

    def to_dict(self):
        return {
            "best": self.best.to_dict(),
            "value": self.value,
            "n_iter": self.n_iter,
            "converged": self.converged,
            "history": [{"value": v, "param": p.to_dict()} for v, p in self.history],
            "starts": [{"value": v, "param": p.to_dict()} for v, p in self.starts],
        }


class ParisiMinimizer(BaseEstimator):
    """Multi-start Nelder-Mead over the ``k``-step family.

    Parameters
    ----------
    n_starts : int
        Random starts (in addition to any ``init`` passed to :meth:`fit`).
    seed : int
        Seed for the start points; equal seeds give identical histories.
    monotone : bool
        Restrict to nonincreasing parameters (the space ``M``).
    maxiter : int or None
        Nelder-Mead iteration cap per start (default ``400 * 2k``).
    diameter_tol : float
        A start counts as converged when its final simplex, mapped to
        ``(m, t)`` coordinates, has diameter below this.
    solver : ParisiSolver or None
    """

    def __init__(self, n_starts=8, seed=0, monotone=True, maxiter=None, diameter_tol=1e-7, solver=None):
        self.n_starts = n_starts
        self.seed = seed
        self.monotone = monotone
        self.maxiter = maxiter
        self.diameter_tol = diameter_tol
        self.solver = solver

    def _objective(self, problem):
        solver = self.solver if self.solver is not None else ParisiSolver()
        return lambda a: parisi_value(problem, a, solver)

    def _coords(self, z):
        a = decode(z, self.monotone)
        k = len(z) // 2
        g = np.concatenate([a.breakpoints, np.ones(k - a.k)])
        v = np.concatenate([a.values[1:], np.full(k - a.k, a.values[-1])])
        return np.concatenate([v, g])

    def _run_start(self, objective, z0):
        dim = len(z0)
        best = [np.inf, None]
        trail = []

        def f(z):
            a = decode(z, self.monotone)
            val = objective(a)
            if val < best[0]:
                best[0], best[1] = val, a
                trail.append((val, a))
            return val

        res = _scipy_minimize(
            f,
            z0,
            method="Nelder-Mead",
            options={
                "maxiter": self.maxiter or 400 * dim,
                "maxfev": 10 * (self.maxiter or 400 * dim),
                "xatol": 1e-10,
                "fatol": 1e-13,
            },
        )
        pts = np.array([self._coords(z) for z in res.final_simplex[0]])
        diam = max(np.max(np.abs(p - q)) for p in pts for q in pts)
        return best[0], best[1], trail, int(res.nit), bool(diam < self.diameter_tol)

    def fit(self, problem, init=()):
        if isinstance(init, StepParam):
            init = (init,)
        k = problem.k
        objective = self._objective(problem)
        rng = np.random.default_rng(self.seed)
        starts = [encode(a, k, self.monotone) for a in init]
        starts += [rng.normal(0.0, 1.5, size=2 * k) for _ in range(self.n_starts)]

        history = []
        best_val, best_a = np.inf, None
        for a in (StepParam.constant(0.0), StepParam.constant(1.0)):
            v = objective(a)
            if v < best_val:
                best_val, best_a = v, a
                history.append((v, a))

        runs = parallel_map(lambda z0: self._run_start(objective, z0), starts)
        n_iter, incumbents = 0, []
        for val, a, trail, nit, _ in runs:
            n_iter += nit
            incumbents.append((val, a))
            for v, p in trail:
                if v < best_val:
                    best_val, best_a = v, p
                    history.append((v, p))
        # Flag of the best start; an anchor beating every start counts as converged.
        best_run = min(runs, key=lambda r: r[0]) if runs else None
        converged = best_run is None or best_run[0] > best_val or best_run[4]
        self.result_ = MinimizeResult(best_a, float(best_val), n_iter, converged, history, incumbents)
        self.best_param_ = best_a
        self.best_value_ = float(best_val)
        return self

    def score(self, problem, a):
        """Negative Parisi value of ``a`` (larger is better, sklearn-style)."""
        return -self._objective(problem)(a)


def minimize(problem, n_starts=8, seed=0, monotone=True, init=(), solver=None, **kw):
    """Convenience wrapper returning :class:`MinimizeResult`."""
    est = ParisiMinimizer(n_starts=n_starts, seed=seed, monotone=monotone, solver=solver, **kw)
    return est.fit(problem, init=init).result_
