import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from vipgm.convex_sets import Box
from vipgm.experiments import (
    RATE_POWER_HALF_MINUS_P,
    RATE_POWER_MINUS_HALF_P,
    RATE_SQRT_LOG_OVER_K,
    bound_validity_sweep,
    catalog,
    counterexample_constant_step,
    counterexample_unbounded,
    descent_inequality_max_violation,
    exp_growth_problem,
    fit_loglog_slope,
    oracle_solve_affine_box,
    oracle_solve_grid,
    rate_benchmark,
    rate_regime,
    rate_study,
    rate_value,
    tail_ratio_max,
)
from vipgm.operators import Affine, ExpGrowth1D, OperatorConstants
from vipgm.solvers import PSeries, StopCriteria, gpm_unbounded, gpm_variable
from vipgm.vi import ViProblem


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def test_active_set_oracle_examples():
    assert_allclose(oracle_solve_affine_box([[1.0]], [-3.0], Box([-1.0], [1.0])), [1.0])
    assert_allclose(
        oracle_solve_affine_box(np.eye(2), [0.0, 0.0], Box([-1.0, -1.0], [1.0, 1.0])), [0.0, 0.0]
    )
    assert_allclose(
        oracle_solve_affine_box(2.0 * np.eye(2), [-1.0, -1.0], Box([0.0, 0.0], [10.0, 10.0])),
        [0.5, 0.5],
    )


def test_active_set_oracle_rejects_indefinite_operator():
    with pytest.raises(ValueError):
        oracle_solve_affine_box([[-1.0]], [0.0], Box([-1.0], [1.0]))


def test_grid_oracle_examples():
    from vipgm.experiments import sqrt_sign_problem

    assert abs(oracle_solve_grid(sqrt_sign_problem(), 10_000)[0]) <= 1e-8

    restricted = ViProblem(
        Box([-6.0], [10.0]), ExpGrowth1D(constants=OperatorConstants(gamma=1.0)), reference_solution=[0.0]
    )
    assert abs(oracle_solve_grid(restricted, 10_000)[0]) <= 1e-8

    shifted = ViProblem(Box([-1.0], [1.0]), Affine([[1.0]], [-3.0]))
    assert abs(oracle_solve_grid(shifted, 2000)[0] - 1.0) <= 1e-8


def test_grid_oracle_preconditions():
    import vipgm

    with pytest.raises(ValueError):
        oracle_solve_grid(exp_growth_problem(), 100)  # unbounded
    big = ViProblem(Box([-1.0] * 3, [1.0] * 3), Affine(np.eye(3), np.zeros(3)))
    with pytest.raises(ValueError):
        oracle_solve_grid(big, 100)
    assert isinstance(vipgm.ViProblem, type)


def test_oracles_agree_on_affine_box_problems():
    cases = [
        ([[1.0]], [-3.0], Box([-1.0], [1.0]), 4000),
        ([[1.0]], [3.0], Box([-1.0], [1.0]), 4000),
        ([[0.5]], [0.2], Box([-1.0], [1.0]), 4000),
        ([[2.0]], [-1.0], Box([0.0], [10.0]), 4000),
        (np.eye(2), [0.0, 0.0], Box([-1.0, -1.0], [1.0, 1.0]), 100),
        (2.0 * np.eye(2), [-1.0, -1.0], Box([0.0, 0.0], [10.0, 10.0]), 100),
        (np.array([[2.0, 1.0], [0.0, 2.0]]), [-2.0, -2.0], Box([0.0, 0.0], [1.0, 1.0]), 100),
    ]
    for matrix, offset, box, resolution in cases:
        exact = oracle_solve_affine_box(matrix, offset, box)
        problem = ViProblem(box, Affine(matrix, offset))
        gridded = oracle_solve_grid(problem, resolution)
        assert np.linalg.norm(exact - gridded) <= 1e-6


# ---------------------------------------------------------------------------
# counterexample studies
# ---------------------------------------------------------------------------


def test_constant_step_study_passes():
    verdict = counterexample_constant_step(0.5, 0.2, 10_000)
    assert verdict.passed, verdict.checks
    assert verdict.odd_iterates[1] > verdict.odd_iterates[0]
    assert abs(verdict.odd_iterates[1] - 0.2499921923786205) < 1e-12
    # the exact-arithmetic strict increase saturates at float resolution
    assert not verdict.odd_strictly_increasing_exact
    assert verdict.saturation_index is not None
    pre = verdict.odd_iterates[: verdict.saturation_index + 1]
    assert np.all(np.diff(pre) > 0.0)


def test_constant_step_study_other_parameters():
    verdict = counterexample_constant_step(0.9, 0.5, 10_000)
    assert verdict.passed, verdict.checks
    assert np.all(verdict.odd_iterates <= 0.81 + 1e-10)


def test_constant_step_study_input_gates():
    with pytest.raises(ValueError):
        counterexample_constant_step(0.5, 0.3, 100)  # x1 >= lam^2
    with pytest.raises(ValueError):
        counterexample_constant_step(1.5, 0.2, 100)
    with pytest.raises(ValueError):
        counterexample_constant_step(0.5, 0.0, 100)


def test_divergence_study():
    verdict = counterexample_unbounded(10)
    assert verdict.passed, verdict.checks
    assert verdict.iterate_values[1] == -6.0
    assert verdict.iterate_values[2] == 186.0
    assert verdict.diverged_at == 4
    assert verdict.report.termination.kind == "diverged"


def test_divergence_study_minimal_iterations():
    verdict = counterexample_unbounded(3)
    assert verdict.passed, verdict.checks


def test_restriction_rescues_divergent_run():
    report = gpm_unbounded(
        exp_growth_problem(), [2.0], 1.0, PSeries(1.0), StopCriteria(max_iters=10_000, step_tol=0.0)
    )
    assert report.final_distance_to_reference([0.0]) < 1e-2


# ---------------------------------------------------------------------------
# rate studies
# ---------------------------------------------------------------------------


def test_rate_regimes():
    assert rate_regime(1.0) == RATE_SQRT_LOG_OVER_K
    assert rate_regime(0.75) == RATE_POWER_HALF_MINUS_P
    assert rate_regime(0.5) == RATE_POWER_MINUS_HALF_P
    assert rate_regime(0.25) == RATE_POWER_MINUS_HALF_P
    with pytest.raises(ValueError):
        rate_regime(0.0)
    assert rate_value(1.0, 100) == pytest.approx(math.sqrt(math.log(100) / 100))
    assert rate_value(0.75, 16) == pytest.approx(16.0 ** (-0.25))
    assert rate_value(0.5, 16) == pytest.approx(16.0 ** (-0.25))


def test_slope_fit_recovers_power_law():
    ks = np.arange(10, 2000)
    errors = ks ** (-0.4)
    assert abs(fit_loglog_slope(ks, errors) - (-0.4)) <= 1e-6


def test_rate_study_requires_rescaled_operator():
    problem = ViProblem(
        Box([-1.0, -1.0], [1.0, 1.0]),
        Affine(np.eye(2), np.zeros(2), constants=OperatorConstants(gamma=1.0)),
        reference_solution=[0.0, 0.0],
    )
    with pytest.raises(ValueError):
        rate_study(problem, [1.0, 1.0], 1.0, 1000)


def test_rate_study_benchmark_harmonic():
    problem, start = rate_benchmark()
    result = rate_study(problem, start, 1.0, 100_000)
    assert not result.converged_exactly
    assert result.theoretical_rate == RATE_SQRT_LOG_OVER_K
    # decay essentially like 1/sqrt(k); generous slack for the log factor
    assert result.fitted_slope <= -0.35
    assert result.bound_constant is not None and math.isfinite(result.bound_constant)
    # the tail never exceeds the fitted envelope, by construction of the max
    tail_ks = result.ks[result.tail_start :]
    tail_errors = result.errors[result.tail_start :]
    assert np.all(tail_errors <= result.bound_constant * rate_value(1.0, tail_ks) + 1e-15)


def test_rate_study_constant_not_growing_in_later_windows():
    problem, start = rate_benchmark()
    result = rate_study(problem, start, 0.75, 100_000)
    assert result.bound_constant is not None and math.isfinite(result.bound_constant)
    maxima = [tail_ratio_max(result, f) for f in (0.5, 0.25, 0.1)]
    assert maxima[0] >= maxima[1] >= maxima[2] - 1e-12


def test_rate_study_exact_convergence_verdict():
    problem, start = rate_benchmark()
    result = rate_study(problem, [0.0, 0.0], 1.0, 200)
    assert result.converged_exactly
    assert result.fitted_slope is None and result.bound_constant is None


def test_faster_decay_for_larger_exponent_on_benchmark():
    # stated empirical trend: the fitted tail slope at p = 0.75 is strictly
    # more negative than at p = 0.25 on the fixed benchmark
    problem, start = rate_benchmark()
    steep = rate_study(problem, start, 0.75, 100_000)
    shallow = rate_study(problem, start, 0.25, 100_000)
    assert steep.fitted_slope is not None and shallow.fitted_slope is not None
    assert steep.fitted_slope < shallow.fitted_slope


# ---------------------------------------------------------------------------
# descent inequality and bound sweeps
# ---------------------------------------------------------------------------


def test_descent_check_requires_full_trace():
    problem, start = rate_benchmark()
    report = gpm_variable(problem, start, PSeries(1.0), StopCriteria(max_iters=25_000, step_tol=0.0))
    with pytest.raises(ValueError):
        descent_inequality_max_violation(report, 0.5, math.sqrt(2.0))


def test_descent_check_requires_reference():
    problem = ViProblem(Box([-1.0], [1.0]), Affine([[0.5]], [0.0], constants=OperatorConstants(gamma=0.5)))
    report = gpm_variable(problem, [1.0], PSeries(1.0), StopCriteria(max_iters=50, step_tol=0.0), trace_every=1)
    with pytest.raises(ValueError):
        descent_inequality_max_violation(report, 0.5, 1.0)


def test_bound_sweep_has_no_violations():
    for result in bound_validity_sweep(points_per_problem=200, seed=3):
        assert result.max_violation_normal <= 1e-9, result
        assert result.max_violation_interior <= 1e-9, result
        if result.max_violation_natural is not None:
            assert result.max_violation_natural <= 1e-9, result


def test_catalog_entries_are_consistent():
    names = [entry.name for entry in catalog()]
    assert len(names) == len(set(names))
    for entry in catalog():
        assert entry.problem.reference_solution is not None
        assert entry.gamma > 0
