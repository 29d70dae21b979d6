"""Small input-checking helpers in the spirit of ``sklearn.utils.validation``."""

import numpy as np

from .exceptions import DomainError


def as_float_array(x, name="x"):
    """Return ``x`` as a float64 array (0-d allowed) with finite entries."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def check_unit_interval(value, name):
    v = float(value)
    if not (0.0 <= v <= 1.0):
        raise DomainError(f"{name}={v!r} must lie in [0, 1]")
    return v


def check_nonnegative(value, name):
    v = float(value)
    if not v >= 0.0:
        raise DomainError(f"{name}={v!r} must be nonnegative")
    return v


def check_positive_int(value, name):
    if isinstance(value, bool) or int(value) != value or int(value) < 1:
        raise DomainError(f"{name}={value!r} must be a positive integer")
    return int(value)


def scalar_or_array(template, result):
    """Collapse ``result`` to a Python float when ``template`` was a scalar."""
    if np.ndim(template) == 0:
        return float(np.asarray(result).reshape(()))
    return result
