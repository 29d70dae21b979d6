import math

import numpy as np
import pytest

from parisi_lab.exceptions import PreconditionError, WeightNormalizationError
from parisi_lab.initial import linear, log_cosh, scaled, smoothed_relu
from parisi_lab.params import StepParam
from parisi_lab.pde import ParisiSolver
from parisi_lab.probe import (
    asymptotic_check,
    coefficients,
    conjecture_scan,
    covariance_check,
    m_curve,
    gibbs_weight,
    inequality_suite,
    interpolation_weight,
    max_principle_scan,
    mixture_check,
    odd_comparison_check,
    omega1_integral,
    one_sided_scan,
    sinh_representation,
)
from parisi_lab.quad import gauss_expectation

from conftest import even_pairs, gaussian_oracle, nondecreasing_pairs

LC = log_cosh()
ALPHAS = np.linspace(0, 1, 11)
XS = [0.0, 1.0, -1.0, 2.0, -2.0]
ONE = lambda x, y: np.ones(np.broadcast_shapes(np.shape(x) + (1,), np.shape(y)))


# --------------------------------------------------------------------------
# convexity scans


def test_one_sided_endpoints_with_shared_phi():
    rep = one_sided_scan(LC, LC, StepParam.constant(0.3), StepParam.constant(0.9), ALPHAS, XS)
    assert np.max(np.abs(rep.gaps[[0, -1]])) < 1e-9
    assert rep.min_gap >= -1e-7 and rep.passed
    assert np.all(rep.gaps[1:-1] > 0)
    assert rep.summary_line().startswith("PASS")
    assert len(rep.rows()) == len(ALPHAS) * len(XS)


def test_one_sided_even_pair():
    a1 = StepParam((0.4,), (0.5, 0.2))
    a2 = StepParam((0.4,), (0.9, 0.6))
    rep = one_sided_scan(LC, scaled(LC, 2.0), a1, a2, ALPHAS, XS)
    assert rep.metadata["pair_class"] == "F1"
    assert rep.min_gap >= -1e-7
    assert np.max(np.abs(rep.gaps[[0, -1]])) < 1e-9


def test_one_sided_preconditions():
    with pytest.raises(PreconditionError, match="t="):
        one_sided_scan(LC, LC, StepParam.constant(0.9), StepParam.constant(0.3), ALPHAS, XS)
    with pytest.raises(PreconditionError):
        one_sided_scan(scaled(LC, 2.0), LC, StepParam.constant(0.3), StepParam.constant(0.9), ALPHAS, XS)


def test_gap_relabeling_symmetry():
    a1, a2 = StepParam((0.5,), (0.8, 0.2)), StepParam((0.3,), (0.6, 0.4))
    r12 = conjecture_scan(LC, a1, a2, ALPHAS, XS)
    r21 = conjecture_scan(LC, a2, a1, ALPHAS[::-1], XS)
    assert np.max(np.abs(r12.gaps - r21.gaps)) < 1e-9


def test_conjecture_degenerate_direction():
    a = StepParam((0.5,), (0.8, 0.2))
    rep = conjecture_scan(LC, a, a, ALPHAS, XS)
    assert np.max(np.abs(rep.gaps)) < 1e-9


def test_conjecture_crossing_pair_and_refinement():
    a1, a2 = StepParam((0.5,), (0.8, 0.2)), StepParam((0.5,), (0.2, 0.8))
    solver = ParisiSolver()
    rep = conjecture_scan(LC, a1, a2, ALPHAS, XS, solver)
    fine = conjecture_scan(LC, a1, a2, ALPHAS, XS, solver.refined())
    assert solver.refined().order == 120 and solver.refined().h == pytest.approx(0.01)
    assert np.max(np.abs(rep.gaps - fine.gaps)) < 1e-6
    assert rep.metadata["kind"] == "conjecture"
    assert isinstance(rep.candidates, list)


def test_conjecture_refines_only_below_tolerance():
    a1, a2 = StepParam((0.5,), (0.8, 0.2)), StepParam((0.5,), (0.2, 0.8))
    rep = conjecture_scan(LC, a1, a2, ALPHAS, XS, tolerance=-1.0)  # every gap counts as negative
    assert rep.metadata["refined_rows"] == len(ALPHAS)
    assert len(rep.candidates) == 0 or all(c["refined_gap"] < 1.0 for c in rep.candidates)


def test_m_curves():
    ms = np.linspace(0, 1, 41)
    lin = m_curve(linear(0.8, 0.3), 1.5, ms)
    assert np.allclose(lin.values, 0.8 * 1.5 + 0.3 + 0.32 * ms, atol=1e-13)
    assert np.max(np.abs(lin.second_differences)) < 1e-12
    rep = m_curve(LC, 0.0, ms)
    assert rep.convex
    oracle = gaussian_oracle(lambda u: math.log(math.cosh(u)), 0.7, 1.0)
    assert abs(m_curve(LC, 0.7, [0.0]).values[0] - oracle) < 1e-8


def test_m_curve_requires_class():
    bad = linear(-1.0, 0.0)
    with pytest.raises(PreconditionError):
        m_curve(bad, 0.0, [0.1, 0.2, 0.3])


# --------------------------------------------------------------------------
# covariance inequalities


def test_fkg_variance():
    ident = lambda u: np.asarray(u, dtype=float)
    for sigma in (0.5, 1.0, 2.0):
        assert covariance_check(ident, ident, ONE, 0.3, sigma) == pytest.approx(sigma**2, rel=1e-12)


def test_interpolation_weight_suite():
    m1, m2 = 0.3, 0.7
    phi1, phi2 = LC, scaled(LC, 2.0)
    f2 = lambda u: m2 * phi2.value(u) - m1 * phi1.value(u)
    for s in np.linspace(0, 1, 11):
        W = interpolation_weight(phi1, phi2, m1, m2, s, 0.8)
        for x in (0.0, 0.7, 2.0):
            assert covariance_check(np.tanh, f2, W, x, 0.8, "even_odd") >= -1e-10


def test_even_odd_against_region_integral():
    lcv = lambda u: np.log(np.cosh(u))
    f_even = lambda u: 1.5 * lcv(u)
    W = gibbs_weight(lambda y: 0.4 * lcv(y), 1.0)
    for x in (0.0, 0.5, 2.0):
        cov = covariance_check(np.tanh, f_even, W, x, 1.0, "even_odd")
        region = omega1_integral(f_even, np.tanh, W, x, 1.0)
        assert cov >= -1e-10 and region >= -1e-10
        assert abs(cov - region) < 1e-8


def test_covariance_preconditions():
    ident = lambda u: np.asarray(u, dtype=float)
    with pytest.raises(PreconditionError):
        covariance_check(ident, lambda u: -np.asarray(u), ONE, 0.0, 1.0)
    with pytest.raises(PreconditionError):
        covariance_check(np.tanh, lambda u: np.asarray(u) ** 2, ONE, -0.5, 1.0, "even_odd")
    skew = gibbs_weight(lambda y: 0.3 * np.asarray(y), 1.0)
    with pytest.raises(PreconditionError):
        covariance_check(np.tanh, lambda u: np.asarray(u) ** 2, skew, 0.5, 1.0, "even_odd")


def test_weight_normalisation_error():
    twice = lambda x, y: 2.0 * ONE(x, y)
    with pytest.raises(WeightNormalizationError):
        covariance_check(np.tanh, np.tanh, twice, 0.0, 1.0)


def test_randomised_suite():
    rows = inequality_suite(60, seed=3)
    assert min(r["covariance"] for r in rows) >= -1e-10
    assert {r["variant"] for r in rows} == {"monotone", "even_odd"}


def test_odd_comparison():
    xs = np.linspace(0, 3, 31)
    ident = lambda u: np.asarray(u, dtype=float)
    assert odd_comparison_check(np.tanh, np.tanh, xs, 1.0) == 0.0
    assert odd_comparison_check(np.tanh, ident, xs, 1.0) >= -1e-10
    with pytest.raises(PreconditionError):
        odd_comparison_check(ident, np.tanh, xs, 1.0)
    with pytest.raises(PreconditionError):
        odd_comparison_check(np.cosh, np.cosh, xs, 1.0)


def test_sinh_representation():
    direct = gauss_expectation(200, np.tanh, 1.0, 1.0)
    assert abs(sinh_representation(math.tanh, 1.0, 1.0) - direct) < 1e-8
    assert abs(sinh_representation(math.tanh, 2.5, 0.6) - gauss_expectation(200, np.tanh, 2.5, 0.6)) < 1e-8


# --------------------------------------------------------------------------
# maximum principle


def test_coefficients_example():
    n, c1, c2 = coefficients(0.5, 0.4, 0.8)
    assert n == pytest.approx(0.6)
    assert c1 == pytest.approx(-0.05, abs=1e-15) and c2 == pytest.approx(-0.25, abs=1e-15)
    assert c1 - c2 == pytest.approx(2 * 0.25 * 0.4, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_degenerate_mixture(alpha):
    rep = max_principle_scan(LC, scaled(LC, 2.0), 0.3, 0.7, alpha, np.linspace(-4, 4, 41), [0.0, 0.5, 1.0])
    assert abs(rep.max_F) < 1e-12
    assert rep.n_violations == 0 and rep.passed


def test_max_principle_even_pair():
    rep = max_principle_scan(LC, scaled(LC, 2.0), 0.3, 0.7, 0.4, np.linspace(-6, 6, 121), np.linspace(0, 1, 11))
    assert rep.max_F <= 1e-7
    assert rep.passed and rep.c2 < 0 and rep.c1 >= rep.c2
    for r in rep.records:
        assert abs((r["c1"] - r["c2"]) - 2 * 0.4 * 0.6 * 0.4) < 1e-12
        assert r["Ft"] <= 1e-5


def test_max_principle_preconditions():
    with pytest.raises(PreconditionError):
        max_principle_scan(LC, LC, 0.7, 0.3, 0.5, [0.0], [0.5])
    with pytest.raises(PreconditionError):
        max_principle_scan(LC, LC, 0.0, 0.3, 0.5, [0.0], [0.5])


def test_delta2_factorises_at_critical_points():
    # near x = 0 the even pair has F_x ~ 0; the factored and raw forms agree there
    rep = max_principle_scan(LC, scaled(LC, 2.0), 0.3, 0.7, 0.4, np.array([0.0]), np.linspace(0.1, 1, 10))
    for r in rep.records:
        assert abs(r["delta2"] - r["delta2_factored"]) < 1e-10


@pytest.mark.parametrize("pair", even_pairs() + nondecreasing_pairs())
def test_mixture_inequality(pair):
    xs = np.linspace(-5, 5, 21)
    ts = np.linspace(0.2, 1.0, 5)
    rep = mixture_check(*pair, 0.3, 0.7, 0.4, xs, ts)
    assert rep.max_excess <= 1e-8
    assert rep.max_deriv_excess <= 1e-8


# --------------------------------------------------------------------------
# asymptotics


def test_asymptotics_linear_is_exact():
    rep = asymptotic_check(linear(0.7, 0.2), 0.4, np.linspace(0, 1, 11), [-3.0, 2.0, 9.0])
    assert rep.max_deviation < 1e-13


def test_asymptotics_log_cosh():
    rep = asymptotic_check(LC, 0.5, np.linspace(0, 1, 11), [-15.0, -8.0, 8.0, 15.0])
    assert rep.deviation_at(15.0) <= 1e-6 and rep.deviation_at(-15.0) <= 1e-6
    assert rep.deviation_at(8.0) > rep.deviation_at(15.0)


def test_asymptotics_needs_tails():
    phi = smoothed_relu(1.0)
    bare = type(phi)(phi.name, phi.value, phi.deriv1, phi.deriv2, 1.0, 0.25, phi.class_tag, None)
    with pytest.raises(PreconditionError):
        asymptotic_check(bare, 0.5, [0.5], [10.0])
