"""Exception hierarchy shared by every parisi_lab module."""


class ParisiLabError(Exception):
    """Base class for all library errors."""


class DomainError(ParisiLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class NonFiniteError(ParisiLabError, FloatingPointError):
    """An evaluator produced a non-finite value at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class PreconditionError(ParisiLabError, ValueError):
    """Inputs violate a documented precondition (ordering, convexity, ...)."""


class TailInconsistencyError(ParisiLabError):
    """Grid values and their linear tails disagree at the splice point."""


class WeightNormalizationError(ParisiLabError):
    """A Gibbs weight does not integrate to one under the Gaussian measure."""


class ConfigError(ParisiLabError):
    """Malformed or unresolvable experiment configuration."""
