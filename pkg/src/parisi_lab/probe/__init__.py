"""Numerical checks of the convexity, covariance, maximum-principle and tail statements."""

from .asymptotics import AsymptoticReport, asymptotic_check
from .convexity import ConvexityReport, CurveReport, conjecture_scan, m_curve, one_sided_scan
from .inequalities import (
    covariance_check,
    gibbs_weight,
    inequality_suite,
    interpolation_weight,
    odd_comparison_check,
    omega1_integral,
    sinh_representation,
)
from .max_principle import MaxPrincipleReport, MixtureReport, coefficients, max_principle_scan, mixture_check

__all__ = [
    "AsymptoticReport",
    "ConvexityReport",
    "CurveReport",
    "MaxPrincipleReport",
    "MixtureReport",
    "asymptotic_check",
    "coefficients",
    "conjecture_scan",
    "covariance_check",
    "m_curve",
    "gibbs_weight",
    "inequality_suite",
    "interpolation_weight",
    "max_principle_scan",
    "mixture_check",
    "odd_comparison_check",
    "omega1_integral",
    "one_sided_scan",
    "sinh_representation",
]
