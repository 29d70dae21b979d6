"""Gauss-Hermite engine for expectations over a standard Gaussian ``z``.

All expectations here are of the form ``E f(x + sigma*z)``; the physicists'
rule (weight ``exp(-s**2)``) is rescaled by ``sqrt(2)*sigma`` on the nodes and
``1/sqrt(pi)`` on the weights.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from ._validation import check_nonnegative, check_positive_int, scalar_or_array
from .exceptions import DomainError, NonFiniteError

DEFAULT_ORDER = 60
SQRT2 = np.sqrt(2.0)
SQRTPI = np.sqrt(np.pi)


@dataclass(frozen=True, eq=False)
class HermiteRule:
    """Nodes and weights of the ``order``-point Gauss-Hermite rule."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def prob_weights(self):
        """Weights normalised to a probability vector (sum to one)."""
        return self.weights / SQRTPI

    def __repr__(self):
        return f"HermiteRule(order={self.order})"


@lru_cache(maxsize=None)
def hermite_rule(order=DEFAULT_ORDER):
    order = check_positive_int(order, "order")
    # Golub-Welsch eigen-decomposition of the Jacobi matrix.
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    nodes = 0.5 * (nodes - nodes[::-1])  # exact symmetry
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return HermiteRule(order, nodes, weights)


def _resolve(rule):
    if rule is None:
        return hermite_rule()
    if isinstance(rule, (int, np.integer)):
        return hermite_rule(int(rule))
    return rule


def sample_nodes(rule, f, x, sigma):
    """Evaluate ``f`` on the shifted nodes ``x + sqrt(2)*sigma*s_i``.

    Returns ``(points, values)`` with a trailing node axis. Raises
    :class:`NonFiniteError` naming the first offending node.
    """
    x = np.asarray(x, dtype=float)
    points = x[..., None] + (SQRT2 * sigma) * rule.nodes
    values = np.asarray(f(points), dtype=float)
    if values.shape != points.shape:
        values = np.broadcast_to(values, points.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        where = tuple(np.argwhere(bad)[0])
        node = int(where[-1])
        raise NonFiniteError(
            f"non-finite integrand at node {node} (abscissa {points[where]:.6g})",
            node=node,
        )
    return points, values


def _point_values(f, x):
    x = np.asarray(x, dtype=float)
    values = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("non-finite integrand at the point mass (sigma = 0)", node=0)
    return np.broadcast_to(values, x.shape)


def gauss_expectation(rule, f, x, sigma):
    """``E f(x + sigma*z)`` for standard Gaussian ``z``.

    ``f`` must accept numpy arrays. ``x`` may be an array, in which case the
    expectation is taken elementwise.
    """
    rule = _resolve(rule)
    sigma = check_nonnegative(sigma, "sigma")
    if sigma == 0.0:
        return scalar_or_array(x, _point_values(f, x).copy())
    _, values = sample_nodes(rule, f, x, sigma)
    return scalar_or_array(x, values @ rule.prob_weights)


EXPM1_SPREAD = 50.0


def log_moment_from_values(values, m, prob_weights):
    """``(1/m) log sum_i p_i exp(m v_i)`` along the last axis (``m = 0``: mean).

    Centred at the mean and evaluated as ``log1p(sum p expm1(m g)) / m`` so
    the absolute error stays ``O(eps * spread)`` as ``m -> 0``; rows whose
    exponents spread wider than ``EXPM1_SPREAD`` use max-subtracted
    log-sum-exp instead (there ``m`` is not small).
    """
    mean = values @ prob_weights
    if m == 0.0:
        return mean
    g = m * (values - mean[..., None])
    wide = g.max(axis=-1) > EXPM1_SPREAD
    s = np.expm1(np.minimum(g, EXPM1_SPREAD)) @ prob_weights
    small = mean + np.log1p(s) / m
    if not np.any(wide):
        return small
    return np.where(wide, logsumexp(m * values, b=prob_weights, axis=-1) / m, small)


def gibbs_weights(values, m, prob_weights):
    """Normalised Gibbs weights ``p_i exp(m v_i) / sum_j p_j exp(m v_j)``."""
    if m == 0.0:
        return np.broadcast_to(prob_weights, values.shape)
    shifted = m * values
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    w = prob_weights * np.exp(shifted)
    return w / w.sum(axis=-1, keepdims=True)


def log_moment(rule, f, x, sigma, m):
    """``(1/m) log E exp(m f(x + sigma*z))``, the ``m -> 0`` limit being ``E f``.

    Computed with max subtraction, so ``m*f`` in the hundreds is harmless.
    """
    rule = _resolve(rule)
    sigma = check_nonnegative(sigma, "sigma")
    m = float(m)
    if not 0.0 <= m <= 1.0:
        raise DomainError(f"m={m!r} must lie in [0, 1]")
    if sigma == 0.0:
        return scalar_or_array(x, _point_values(f, x).copy())
    _, values = sample_nodes(rule, f, x, sigma)
    return scalar_or_array(x, log_moment_from_values(values, m, rule.prob_weights))
