import math

import numpy as np
import pytest

from parisi_lab.exceptions import DomainError, TailInconsistencyError
from parisi_lab.initial import InitialCondition, linear, log_cosh, scaled, smoothed_relu
from parisi_lab.params import StepParam, l1_distance, random_step_param
from parisi_lab.pde import (
    GridFunction,
    ParisiSolver,
    constant_m_solution,
    dx,
    dxx,
    nested_solution,
    pde_residual,
    snapshot_pair_class,
    solve,
    terminal_value,
)

from conftest import even_pairs, log_moment_oracle, nondecreasing_pairs

LC = log_cosh()
TWO_STEP = StepParam((0.5,), (0.8, 0.3))


def closed(x, t):
    return t / 2 + np.log(np.cosh(x))


def test_constant_m_closed_forms():
    for x in (0.0, 1.0, -1.0, 3.0, -3.0):
        for t in (0.25, 1.0):
            assert abs(constant_m_solution(LC, 1.0, x, t) - closed(x, t)) < 1e-9
    phi = linear(0.7, -0.2)
    for m in (0.0, 0.3, 1.0):
        assert constant_m_solution(phi, m, 1.3, 0.6) == pytest.approx(0.7 * 1.3 - 0.2 + 0.49 * m * 0.6 / 2, abs=1e-13)


def test_constant_m_integration_oracle():
    oracle = log_moment_oracle(lambda u: math.log(math.cosh(u)), 1.0, 1.0, 0.5)
    assert abs(constant_m_solution(LC, 0.5, 1.0, 1.0) - oracle) < 1e-9


def test_solve_closed_form_on_grid():
    solver = ParisiSolver(-12.0, 12.0, 0.02)
    trace = solver.propagate(LC, StepParam.constant(1.0))
    g = trace.final
    assert np.max(np.abs(g.values - closed(g.x, 1.0))) < 1e-7
    assert trace.times == (0.0, 1.0)


def test_linear_exact_for_any_steps(rng):
    phi = linear(0.6, 0.25)
    for _ in range(5):
        a = random_step_param(rng, monotone=False)
        trace = solve(phi, a)
        expected = lambda x: 0.6 * x + 0.25 + 0.18 * a.integral()
        x = np.array([-20.0, -3.0, 0.0, 2.5, 20.0])
        assert np.max(np.abs(trace.evaluate(x, 1.0) - expected(x))) < 1e-9
        assert np.max(np.abs(trace.final.values - expected(trace.final.x))) < 1e-9


def test_nested_oracle_two_steps():
    solver = ParisiSolver()
    for x in (0.0, 1.0, -1.0, 2.0, -2.0):
        assert abs(terminal_value(LC, TWO_STEP, x, solver) - nested_solution(LC, TWO_STEP, x)) < 1e-6
        assert abs(solve(LC, TWO_STEP).evaluate(x) - nested_solution(LC, TWO_STEP, x)) < 1e-6


def test_nested_oracle_three_intervals():
    a = StepParam((0.3, 0.7), (0.9, 0.5, 0.1))
    ref = nested_solution(LC, a, 0.5, rule=60)
    assert abs(terminal_value(LC, a, 0.5) - ref) < 1e-6


def test_nested_rejects_long_parameters():
    with pytest.raises(DomainError):
        nested_solution(LC, StepParam((0.2, 0.4, 0.6), (0.9, 0.7, 0.5, 0.3)), 0.0)


def test_trace_times_follow_breakpoints():
    a = StepParam((0.2, 0.7), (0.9, 0.4, 0.1))
    trace = solve(LC, a)
    assert trace.times == (0.0, 0.2, 0.7, 1.0)
    assert all(s.n >= 64 for s in trace.snapshots)


def test_splice_continuity():
    trace = solve(LC, TWO_STEP)
    for s in trace.snapshots:
        assert s.splice_mismatch() < 1e-6
        assert np.all(np.isfinite(s.values))


def test_fitted_tails_when_declared_tail_is_outside_grid():
    trace = solve(smoothed_relu(1.0), TWO_STEP)
    assert trace.snapshots[0].tail_right.A == pytest.approx(1.0, abs=1e-5)
    assert trace.final.splice_mismatch() < 1e-6


def test_tail_mismatch_is_detected():
    bad = InitialCondition("kinked", lambda x: np.asarray(x) ** 2 / 40, lambda x: np.asarray(x) / 20, lambda x: np.full(np.shape(x), 0.05), 1.0, 0.05)
    with pytest.raises(TailInconsistencyError):
        ParisiSolver(-16, 16, 0.1).propagate(bad, StepParam.constant(0.5))


def test_small_grids_rejected():
    with pytest.raises(DomainError):
        ParisiSolver(-1, 1, 0.1).propagate(LC, StepParam.constant(0.5))


def test_evaluate_at_intermediate_times():
    trace = solve(LC, StepParam.constant(1.0))
    for t in (0.0, 0.3, 0.77):
        assert trace.evaluate(0.4, t) == pytest.approx(closed(0.4, t), abs=1e-10)
    with pytest.raises(ValueError):
        trace.evaluate(0.0, 1.5)


def test_outside_grid_uses_tails():
    trace = solve(LC, TWO_STEP)
    g = trace.final
    x = np.array([18.0, 25.0])
    assert np.allclose(g(x), x - math.log(2) + 0.5 * (0.8 * 0.5 + 0.3 * 0.5), atol=1e-9)


def test_dx_examples():
    assert dx(linear(0.4, 1.0), 0.7, 0.3, 0.5) == pytest.approx(0.4, abs=1e-14)
    assert abs(dx(LC, 1.0, 0.0, 1.0)) < 1e-15
    h = 1e-4
    fd = (constant_m_solution(LC, 0.6, 1.2 + h, 0.7) - constant_m_solution(LC, 0.6, 1.2 - h, 0.7)) / (2 * h)
    assert abs(dx(LC, 0.6, 1.2, 0.7) - fd) < 1e-6


def test_dxx_examples(rng):
    assert dxx(linear(0.4, 1.0), 0.7, 0.3, 0.5) == pytest.approx(0.0, abs=1e-14)
    h = 1e-4
    f = lambda x: constant_m_solution(LC, 0.6, x, 0.7)
    fd = (f(1.2 + h) - 2 * f(1.2) + f(1.2 - h)) / h**2
    assert abs(dxx(LC, 0.6, 1.2, 0.7) - fd) < 1e-5
    for phi in (LC, smoothed_relu(1.0), scaled(LC, 3.0)):
        for _ in range(20):
            assert dxx(phi, rng.uniform(), rng.uniform(-5, 5), rng.uniform()) >= -1e-10


def test_residual_examples(rng):
    lin = solve(linear(0.8, 0.1), StepParam.constant(0.6))
    assert pde_residual(lin, [(0.3, 0.5), (-2.0, 0.9)]) < 1e-9
    one = solve(LC, StepParam.constant(1.0))
    assert pde_residual(one, [(x, t) for x in (-2.0, 0.0, 1.5) for t in (0.3, 0.6)]) < 2e-6
    two = solve(LC, TWO_STEP)
    ts = np.concatenate([rng.uniform(0.05, 0.45, 25), rng.uniform(0.55, 0.95, 25)])
    samples = list(zip(rng.uniform(-4, 4, 50), ts))
    assert pde_residual(two, samples) < 1e-4


def test_residual_rejects_breakpoint_samples():
    with pytest.raises(DomainError):
        pde_residual(solve(LC, TWO_STEP), [(0.0, 0.5)])


def test_l1_lipschitz(rng):
    ratios = []
    for _ in range(30):
        a, b = random_step_param(rng), random_step_param(rng)
        d = l1_distance(a, b)
        if d < 1e-3:
            continue
        for x in (0.0, 1.0, -1.0, 2.0, -2.0):
            ratios.append(abs(terminal_value(LC, a, x) - terminal_value(LC, b, x)) / d)
    assert max(ratios) <= 1.0


def test_step_approximations_are_cauchy():
    target = lambda t: 1.0 - t
    vals = []
    for k in (2, 4, 8, 16):
        g = np.linspace(0, 1, k + 1)
        a = StepParam(tuple(g[1:-1]), tuple(target(0.5 * (g[:-1] + g[1:]))))
        vals.append(terminal_value(LC, a, 0.7))
    gaps = np.abs(np.diff(vals))
    assert np.all(gaps[:-1] / gaps[1:] >= 1.5)


def test_grid_convergence():
    coarse = ParisiSolver().propagate(LC, StepParam.constant(1.0)).final
    fine = ParisiSolver().refined().propagate(LC, StepParam.constant(1.0)).final
    x = np.linspace(-8, 8, 33)
    assert np.max(np.abs(coarse(x) - fine(x))) < 1e-6
    coarse = ParisiSolver().propagate(LC, TWO_STEP).final
    fine = ParisiSolver(h=0.01).propagate(LC, TWO_STEP).final
    assert np.max(np.abs(coarse(x) - fine(x))) < 1e-6


def test_pchip_option_is_coarser_but_close():
    pchip = ParisiSolver(interpolation="pchip")
    for x in (0.0, 1.0):
        assert abs(terminal_value(LC, TWO_STEP, x, pchip) - nested_solution(LC, TWO_STEP, x)) < 1e-5


def test_snapshot_class_preservation():
    a1 = StepParam((0.3, 0.6), (0.3, 0.2, 0.1))
    a2 = StepParam((0.3, 0.6), (0.7, 0.7, 0.4))
    for pairs, label, solver in (
        (even_pairs(), "F1", ParisiSolver()),
        (nondecreasing_pairs(), "F2", ParisiSolver(-24.0, 24.0)),
    ):
        for p1, p2 in pairs:
            t1, t2 = solver.propagate(p1, a1), solver.propagate(p2, a2)
            for g1, g2 in zip(t1.snapshots, t2.snapshots):
                assert snapshot_pair_class(g1, g2) == label


def test_estimator_api():
    est = ParisiSolver(h=0.05).fit(LC, StepParam.constant(1.0))
    assert est.predict(0.0) == pytest.approx(0.5, abs=1e-9)
    assert est.get_params()["h"] == 0.05
    assert isinstance(est.trace_.final, GridFunction)


def test_snapshot_rows():
    g = solve(LC, StepParam.constant(1.0)).final
    rows = g.rows()
    assert len(rows) == g.n and set(rows[0]) == {"t", "x", "F", "Fx"}
