"""Numerical laboratory for the Parisi functional with step-function order parameters."""

from .exceptions import (
    ConfigError,
    DomainError,
    NonFiniteError,
    ParisiLabError,
    PreconditionError,
    TailInconsistencyError,
    WeightNormalizationError,
)
from .functional import MinimizeResult, ParisiMinimizer, ParisiProblem, minimize, parisi_functional, parisi_value
from .initial import InitialCondition, builtin, linear, log_cosh, mollify_pair, smoothed_relu, soft_abs
from .params import StepParam
from .pde import ParisiSolver, SolveTrace, nested_solution, solve, terminal_value
from .quad import gauss_expectation, hermite_rule, log_moment

__version__ = "0.1.0"
