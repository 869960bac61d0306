import numpy as np
import pytest
from numpy.testing import assert_allclose

from vipgm.convex_sets import Ball, Box, FullSpace
from vipgm.experiments import catalog
from vipgm.operators import Affine, ExpGrowth1D, OperatorConstants, SqrtSign1D
from vipgm.vi import (
    KIND_INTERIOR,
    KIND_NATURAL,
    KIND_NORMAL,
    ViProblem,
    error_bound_interior,
    error_bound_natural,
    error_bound_normal,
    is_solution,
    natural_map,
    normal_map,
)


def sqrt_problem():
    return ViProblem(
        Box([-1.0], [1.0]),
        SqrtSign1D(constants=OperatorConstants(gamma=1.0)),
        reference_solution=[0.0],
    )


def shifted_affine_problem():
    # F(x) = x - 3 on [-1, 1]; solution pinned at the upper bound 1
    return ViProblem(
        Box([-1.0], [1.0]),
        Affine([[1.0]], [-3.0], constants=OperatorConstants(gamma=1.0, lipschitz=1.0)),
        reference_solution=[1.0],
    )


# ---------------------------------------------------------------------------
# residual maps
# ---------------------------------------------------------------------------


def test_natural_map_values():
    p = sqrt_problem()
    assert_allclose(natural_map(p, [0.0]), [0.0])
    assert_allclose(natural_map(p, [1.0]), [2.0])
    q = shifted_affine_problem()
    assert_allclose(natural_map(q, [1.0]), [0.0])
    assert_allclose(natural_map(q, [0.0]), [-1.0])


def test_natural_map_requires_membership():
    with pytest.raises(ValueError):
        natural_map(sqrt_problem(), [2.0])


def test_normal_map_values():
    p = sqrt_problem()
    assert_allclose(normal_map(p, [2.0]), [3.0])
    # at an interior solution the normal map vanishes
    assert_allclose(normal_map(p, [0.0]), [0.0])
    free = ViProblem(FullSpace(1), ExpGrowth1D(), reference_solution=[0.0])
    assert_allclose(normal_map(free, [1.5]), free.operator.evaluate([1.5]))


def test_is_solution():
    p = sqrt_problem()
    assert is_solution(p, [0.0], 1e-12)
    assert not is_solution(p, [0.5], 1e-12)
    assert is_solution(shifted_affine_problem(), [1.0], 1e-12)


def test_reference_solution_is_validated():
    with pytest.raises(ValueError):
        ViProblem(Box([-1.0], [1.0]), SqrtSign1D(), reference_solution=[0.5])


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        ViProblem(Box([-1.0, -1.0], [1.0, 1.0]), SqrtSign1D())


# ---------------------------------------------------------------------------
# error bounds
# ---------------------------------------------------------------------------


def test_natural_bound_values():
    q = shifted_affine_problem()
    at_solution = error_bound_natural(q, [1.0], 1.0, 1.0)
    assert at_solution.radius == 0.0
    cert = error_bound_natural(q, [0.0], 1.0, 1.0)
    assert cert.kind == KIND_NATURAL
    assert abs(cert.residual_norm - 1.0) < 1e-12
    assert abs(cert.radius - 2.0) < 1e-12
    assert_allclose(cert.anchor, [0.0])
    assert 1.0 <= cert.radius  # true distance is 1
    cert = error_bound_natural(q, [0.5], 1.0, 1.0)
    assert abs(cert.radius - 1.0) < 1e-12


def test_normal_bound_values():
    p = sqrt_problem()
    cert = error_bound_normal(p, [2.0], 1.0)
    assert cert.kind == KIND_NORMAL
    assert abs(cert.residual_norm - 3.0) < 1e-12
    assert abs(cert.radius - 3.0) < 1e-12
    assert_allclose(cert.anchor, [1.0])
    assert np.linalg.norm(p.reference_solution - cert.anchor) <= cert.radius

    ball_problem = ViProblem(
        Ball([0.0, 0.0], 1.0), Affine(np.eye(2), np.zeros(2)), reference_solution=[0.0, 0.0]
    )
    cert = error_bound_normal(ball_problem, [2.0, 0.0], 1.0)
    assert abs(cert.radius - 2.0) < 1e-12
    assert_allclose(cert.anchor, [1.0, 0.0])

    assert error_bound_normal(p, [0.0], 1.0).radius == 0.0


def test_interior_bound_values():
    p = sqrt_problem()
    cert = error_bound_interior(p, [0.25], 1.0)
    assert cert.kind == KIND_INTERIOR
    assert abs(cert.radius - 1.0) < 1e-12
    assert abs(p.reference_solution[0] - 0.25) <= cert.radius

    free = ViProblem(FullSpace(1), ExpGrowth1D(), reference_solution=[0.0])
    cert = error_bound_interior(free, [1.0], 1.0)
    assert abs(cert.radius - 2.0) < 1e-12

    assert error_bound_interior(p, [0.0], 1.0).radius == 0.0
    with pytest.raises(ValueError):
        error_bound_interior(p, [1.5], 1.0)


def test_constants_resolution_and_provenance():
    p = sqrt_problem()  # gamma declared
    cert = error_bound_normal(p, [0.3])
    assert cert.gamma == 1.0 and cert.constants_source == "declared"
    cert = error_bound_normal(p, [0.3], 2.0)
    assert cert.gamma == 2.0 and cert.constants_source == "caller"
    bare = ViProblem(Box([-1.0], [1.0]), SqrtSign1D())
    with pytest.raises(ValueError):
        error_bound_normal(bare, [0.3])
    with pytest.raises(ValueError):
        error_bound_natural(bare, [0.3], gamma=1.0)  # no Lipschitz constant anywhere


# ---------------------------------------------------------------------------
# cross-cutting properties
# ---------------------------------------------------------------------------


def test_residuals_vanish_at_solutions():
    # natural map at the solution, normal map at its preimage
    for entry in catalog():
        problem, solution = entry.problem, entry.problem.reference_solution
        assert np.linalg.norm(natural_map(problem, solution)) <= 1e-10, entry.name
        preimage = solution - problem.operator.evaluate(solution)
        assert np.linalg.norm(normal_map(problem, preimage)) <= 1e-10, entry.name


def test_bound_validity_small_sweep():
    for entry in catalog():
        problem = entry.problem
        solution = problem.reference_solution
        rng = np.random.default_rng(11)
        lo, hi = problem.set.bounding_box()
        width = hi - lo
        for _ in range(200):
            x = rng.uniform(lo - width, hi + width)
            cert = error_bound_normal(problem, x, entry.gamma)
            assert np.linalg.norm(solution - cert.anchor) <= cert.radius + 1e-9, entry.name
            inside = problem.set.project(x)
            dist = np.linalg.norm(solution - inside)
            cert = error_bound_interior(problem, inside, entry.gamma)
            assert dist <= cert.radius + 1e-9, entry.name
            if entry.lipschitz is not None:
                cert = error_bound_natural(problem, inside, entry.gamma, entry.lipschitz)
                assert dist <= cert.radius + 1e-9, entry.name


def test_interior_bound_is_normal_bound_on_the_set():
    for entry in catalog():
        problem = entry.problem
        rng = np.random.default_rng(5)
        lo, hi = problem.set.bounding_box()
        for _ in range(50):
            inside = problem.set.project(rng.uniform(lo, hi))
            normal_radius = error_bound_normal(problem, inside, entry.gamma).radius
            interior_radius = error_bound_interior(problem, inside, entry.gamma).radius
            assert abs(normal_radius - interior_radius) <= 1e-12 * max(1.0, interior_radius)


def test_radii_shrink_toward_solution():
    scales = [1.0, 0.1, 0.01, 0.001]
    for entry in catalog():
        problem, solution = entry.problem, entry.problem.reference_solution
        lo, hi = problem.set.bounding_box()
        interior_point = problem.set.project((lo + hi) / 2.0)
        direction = interior_point - solution
        gap = float(np.linalg.norm(direction))
        operator_at_solution = float(np.linalg.norm(problem.operator.evaluate(solution)))

        if entry.lipschitz is not None and gap > 1e-9:
            radii = [
                error_bound_natural(problem, solution + t * direction, entry.gamma, entry.lipschitz).radius
                for t in scales
            ]
            _assert_shrinks(radii, entry.name)
        # the normal map vanishes at the solution's preimage, not at the
        # solution itself, so walk toward that preimage
        preimage = solution - problem.operator.evaluate(solution)
        radii = [
            error_bound_normal(problem, preimage + t * np.ones(problem.dim), entry.gamma).radius
            for t in scales
        ]
        _assert_shrinks(radii, entry.name)
        if operator_at_solution <= 1e-12 and gap > 1e-9:
            radii = [
                error_bound_interior(problem, solution + t * direction, entry.gamma).radius
                for t in scales
            ]
            _assert_shrinks(radii, entry.name)


def _assert_shrinks(radii, name):
    for larger, smaller in zip(radii, radii[1:]):
        assert smaller <= 10.0 * larger + 1e-12, name
    assert radii[-1] <= radii[0] + 1e-12, name
