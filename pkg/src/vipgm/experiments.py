"""Reference oracles, counterexample studies, bound sweeps and rate fitting.

Everything here is built on the solver and residual machinery but stays
independent of it where it matters: reference solutions come from brute-force
oracles (active-set enumeration, grid search), never from the iteration whose
accuracy they are used to judge.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .convex_sets import Box, ConvexSet, FullSpace, UnboundedSetError, as_vector
from .operators import (
    Affine,
    ExpGrowth1D,
    OperatorConstants,
    ScaledAffine,
    SqrtSign1D,
    rescale_to_half_modulus,
)
from .solvers import PSeries, SolveReport, StopCriteria, gpm_constant, gpm_variable
from .vi import (
    ViProblem,
    error_bound_interior,
    error_bound_natural,
    error_bound_normal,
    natural_map,
)

# Comparisons of exact-arithmetic strictness claims are made with this
# floating-point slack; it sits many orders below the quantities compared.
FLOAT_SLACK = 1e-10


# ---------------------------------------------------------------------------
# Independent solution oracles.
# ---------------------------------------------------------------------------


def oracle_solve_affine_box(matrix, offset, box: Box) -> np.ndarray:
    """Solve VI(box, Ax+b) exactly by enumerating active-set patterns.

    Each coordinate is pinned at its lower bound, its upper bound, or left
    free; the free block is solved linearly and the complementarity signs are
    checked.  Needs a strongly monotone A (symmetric part positive definite)
    and a small dimension; the 3^n enumeration is the point, not a flaw.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    offset = as_vector(offset)
    n = offset.size
    if n > 8:
        raise ValueError("active-set enumeration is limited to dimension 8")
    if box.dim != n:
        raise ValueError("box dimension does not match the operator")
    problem = ViProblem(box, Affine(matrix, offset))
    sign_tol = 1e-9
    for pattern in itertools.product((-1, 0, 1), repeat=n):
        x = np.empty(n)
        free = [i for i, s in enumerate(pattern) if s == 0]
        fixed = [i for i, s in enumerate(pattern) if s != 0]
        valid = True
        for i in fixed:
            bound = box.lower[i] if pattern[i] < 0 else box.upper[i]
            if not np.isfinite(bound):
                valid = False
                break
            x[i] = bound
        if not valid:
            continue
        if free:
            sub = matrix[np.ix_(free, free)]
            rhs = -offset[free]
            if fixed:
                rhs = rhs - matrix[np.ix_(free, fixed)] @ x[fixed]
            try:
                x[free] = np.linalg.solve(sub, rhs)
            except np.linalg.LinAlgError:
                continue
            if np.any(x[free] < box.lower[free] - sign_tol) or np.any(
                x[free] > box.upper[free] + sign_tol
            ):
                continue
        values = matrix @ x + offset
        ok = True
        for i in fixed:
            # at a lower bound the operator must push up, at an upper bound down
            if pattern[i] < 0 and values[i] < -sign_tol:
                ok = False
            if pattern[i] > 0 and values[i] > sign_tol:
                ok = False
        if not ok:
            continue
        x = box.project(x)
        if float(np.linalg.norm(natural_map(problem, x))) <= 1e-10:
            return x
    raise ValueError(
        "no active-set pattern passes the optimality check; "
        "the operator is likely not strongly monotone on this box"
    )


def oracle_solve_grid(problem: ViProblem, resolution: int) -> np.ndarray:
    """Locate the minimizer of the natural-map residual by grid search.

    Scans a regular grid over the (bounded) set, then refines with three
    rounds of ten-times-finer local grids around the incumbent.  Limited to
    one and two dimensions.
    """
    if problem.dim > 2:
        raise ValueError("grid oracle is limited to dimensions 1 and 2")
    if not problem.set.is_bounded:
        raise UnboundedSetError("grid oracle needs a bounded set")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    lo, hi = problem.set.bounding_box()

    def residual(point: np.ndarray) -> float:
        return float(np.linalg.norm(natural_map(problem, point)))

    def scan(center_lo: np.ndarray, center_hi: np.ndarray, points_per_axis: int):
        axes = [
            np.linspace(center_lo[i], center_hi[i], points_per_axis)
            for i in range(problem.dim)
        ]
        best_point, best_value = None, math.inf
        for candidate in itertools.product(*axes):
            point = np.array(candidate)
            if not problem.set.contains(point, 1e-12):
                continue
            value = residual(point)
            if value < best_value:
                best_point, best_value = point, value
        return best_point, best_value

    best, _ = scan(lo, hi, int(resolution) + 1)
    if best is None:
        raise ValueError("no grid point fell inside the set; raise the resolution")
    spacing = np.max((hi - lo) / resolution)
    for _ in range(3):
        window_lo = np.maximum(best - 2 * spacing, lo)
        window_hi = np.minimum(best + 2 * spacing, hi)
        refined, _ = scan(window_lo, window_hi, 41)
        if refined is not None:
            best = refined
        spacing /= 10.0
    return best


# ---------------------------------------------------------------------------
# Stock problems.
# ---------------------------------------------------------------------------


def sqrt_sign_problem() -> ViProblem:
    """The square-root sign operator on [-1, 1]; unique solution 0, modulus 1,
    no finite Lipschitz constant."""
    return ViProblem(
        Box([-1.0], [1.0]),
        SqrtSign1D(constants=OperatorConstants(gamma=1.0, value_bound=2.0)),
        reference_solution=[0.0],
    )


def exp_growth_problem() -> ViProblem:
    """The exponentially growing operator on the whole line; unique solution 0,
    modulus 1, unbounded domain."""
    return ViProblem(
        FullSpace(1),
        ExpGrowth1D(constants=OperatorConstants(gamma=1.0)),
        reference_solution=[0.0],
    )


def rate_benchmark() -> tuple[ViProblem, np.ndarray]:
    """The fixed rate benchmark: identity operator on the square [-1,1]^2,
    rescaled to modulus 1/2, started at the corner (1, 1).

    The unrescaled operator has gamma = L = 1 and value bound sqrt(2), so the
    descent inequality is checkable with exact constants.
    """
    op = Affine(
        np.eye(2),
        np.zeros(2),
        constants=OperatorConstants(gamma=1.0, lipschitz=1.0, value_bound=math.sqrt(2.0)),
    )
    problem = ViProblem(
        Box([-1.0, -1.0], [1.0, 1.0]),
        rescale_to_half_modulus(op, 1.0),
        reference_solution=[0.0, 0.0],
    )
    return problem, np.array([1.0, 1.0])


@dataclass(frozen=True)
class CatalogEntry:
    """An oracle-solved problem with its true constants, for bound sweeps."""

    name: str
    problem: ViProblem
    gamma: float
    lipschitz: float | None  # None when no finite Lipschitz constant exists


def catalog() -> list[CatalogEntry]:
    """Oracle-solved problems covering the operator and set variants."""
    entries: list[CatalogEntry] = []

    entries.append(CatalogEntry("sqrt-sign-box", sqrt_sign_problem(), 1.0, None))

    # exp-growth restricted to a box; Lipschitz bound is the derivative at 10
    box = Box([-6.0], [10.0])
    lip = (2.0**10) * (1.0 + 10.0 * math.log(2.0))
    entries.append(
        CatalogEntry(
            "exp-growth-box",
            ViProblem(
                box,
                ExpGrowth1D(constants=OperatorConstants(gamma=1.0, lipschitz=lip)),
                reference_solution=[0.0],
            ),
            1.0,
            lip,
        )
    )

    def affine_box(name, matrix, offset, lower, upper, gamma, lipschitz):
        b = Box(lower, upper)
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        solution = oracle_solve_affine_box(matrix, offset, b)
        problem = ViProblem(
            b,
            Affine(
                matrix,
                offset,
                constants=OperatorConstants(gamma=gamma, lipschitz=lipschitz),
            ),
            reference_solution=solution,
        )
        entries.append(CatalogEntry(name, problem, gamma, lipschitz))

    affine_box("affine-1d-boundary", [[1.0]], [-3.0], [-1.0], [1.0], 1.0, 1.0)
    affine_box("affine-1d-lower", [[1.0]], [3.0], [-1.0], [1.0], 1.0, 1.0)
    affine_box("affine-1d-interior", [[0.5]], [0.2], [-1.0], [1.0], 0.5, 0.5)
    affine_box("affine-2d-origin", np.eye(2), [0.0, 0.0], [-1.0, -1.0], [1.0, 1.0], 1.0, 1.0)
    affine_box(
        "affine-2d-interior", 2.0 * np.eye(2), [-1.0, -1.0], [0.0, 0.0], [10.0, 10.0], 2.0, 2.0
    )
    # nonsymmetric matrix: modulus is the smallest eigenvalue of the symmetric
    # part (1.5), Lipschitz constant its largest singular value
    nonsym = np.array([[2.0, 1.0], [0.0, 2.0]])
    affine_box(
        "affine-2d-nonsym",
        nonsym,
        [-2.0, -2.0],
        [0.0, 0.0],
        [1.0, 1.0],
        1.5,
        float(np.linalg.norm(nonsym, 2)),
    )

    from .convex_sets import Ball

    # identity on a ball: interior zero at the origin
    entries.append(
        CatalogEntry(
            "affine-ball",
            ViProblem(
                Ball([0.0, 0.0], 1.0),
                Affine(np.eye(2), np.zeros(2), constants=OperatorConstants(gamma=1.0, lipschitz=1.0)),
                reference_solution=[0.0, 0.0],
            ),
            1.0,
            1.0,
        )
    )

    # scaled affine families: strongly pseudomonotone with modulus
    # c_min * gamma(A); Lipschitz constants bounded on the given sets
    entries.append(
        CatalogEntry(
            "scaled-norm-ball",
            ViProblem(
                Ball([0.0, 0.0], 1.0),
                ScaledAffine(
                    np.eye(2),
                    np.zeros(2),
                    "one_plus_norm_sq",
                    constants=OperatorConstants(gamma=1.0, lipschitz=4.0),
                ),
                reference_solution=[0.0, 0.0],
            ),
            1.0,
            4.0,
        )
    )
    entries.append(
        CatalogEntry(
            "scaled-sin-box",
            ViProblem(
                Box([-1.0, -1.0], [1.0, 1.0]),
                ScaledAffine(
                    np.eye(2),
                    [-0.5, 0.25],
                    "two_plus_sin_first",
                    constants=OperatorConstants(gamma=1.0),
                ),
                reference_solution=[0.5, -0.25],
            ),
            1.0,
            None,
        )
    )

    benchmark_problem, _ = rate_benchmark()
    entries.append(CatalogEntry("rate-benchmark", benchmark_problem, 0.5, 0.5))
    return entries


# ---------------------------------------------------------------------------
# Counterexample studies.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantStepVerdict:
    """Outcome of the constant-stepsize study on the square-root sign operator.

    The exact-arithmetic behavior (odd iterates strictly increasing toward
    lam^2, even iterates mirrored below zero, no return near the solution 0)
    saturates at float resolution within a few steps, so the increase and
    containment checks carry a tiny slack; ``odd_strictly_increasing_exact``
    reports the unslackened comparison and ``saturation_index`` the first odd
    position where it stops holding.
    """

    passed: bool
    checks: dict
    odd_iterates: np.ndarray
    even_iterates: np.ndarray
    odd_strictly_increasing_exact: bool
    saturation_index: int | None
    report: SolveReport


def counterexample_constant_step(
    lam: float, x1: float, iters: int, slack: float = FLOAT_SLACK
) -> ConstantStepVerdict:
    """Run the constant-step iteration where it provably cannot reach 0.

    Requires lam in (0, 1) and x1 in (0, lam^2).  The iterates then hop across
    0 forever: odd iterates climb toward lam^2 and never approach the unique
    solution 0.
    """
    lam = float(lam)
    x1 = float(x1)
    if not 0.0 < lam < 1.0:
        raise ValueError("lam must lie in (0, 1)")
    if not 0.0 < x1 < lam * lam:
        raise ValueError("x1 must lie in (0, lam^2)")
    if iters < 3:
        raise ValueError("need at least three iterations")
    problem = sqrt_sign_problem()
    report = gpm_constant(
        problem,
        [x1],
        lam,
        StopCriteria(max_iters=iters, step_tol=0.0),
        trace_every=1,
    )
    xs = np.array([row.point[0] for row in report.iterates])
    odd = xs[0::2]
    even = xs[1::2]
    diffs = np.diff(odd)
    saturation = np.nonzero(diffs <= 0.0)[0]
    limit = lam * lam
    epsilon = x1 / 2.0
    checks = {
        "odd_increasing": bool(np.all(diffs > -slack)),
        "odd_in_range": bool(np.all((odd > 0.0) & (odd < limit + slack))),
        "even_in_range": bool(np.all((even > -limit - slack) & (even < 0.0))),
        "stays_away_from_solution": bool(np.all(np.abs(xs[1:]) > epsilon)),
    }
    return ConstantStepVerdict(
        passed=all(checks.values()),
        checks=checks,
        odd_iterates=odd,
        even_iterates=even,
        odd_strictly_increasing_exact=bool(np.all(diffs > 0.0)),
        saturation_index=None if saturation.size == 0 else int(saturation[0]),
        report=report,
    )


@dataclass(frozen=True)
class DivergenceVerdict:
    """Outcome of the variable-stepsize run on the unbounded line, where the
    exponentially growing operator drives |x_k| >= 2k until overflow."""

    passed: bool
    checks: dict
    iterate_values: np.ndarray
    diverged_at: int
    report: SolveReport


def counterexample_unbounded(iters: int) -> DivergenceVerdict:
    """Run the diverging iteration on the whole line from x1 = 2 with lambda_k = 1/k."""
    if iters < 3:
        raise ValueError("need at least three iterations")
    problem = exp_growth_problem()
    report = gpm_variable(
        problem,
        [2.0],
        PSeries(1.0),
        StopCriteria(max_iters=iters, step_tol=0.0),
        trace_every=1,
    )
    xs = [row.point[0] for row in report.iterates]
    ks = [row.k for row in report.iterates]
    # the final point is the first iterate past the divergence threshold
    xs.append(float(report.final_point[0]))
    ks.append(ks[-1] + 1)
    values = np.array(xs)
    growth = [abs(x) >= 2.0 * k for k, x in zip(ks, values) if np.isfinite(x)]
    checks = {
        "diverged": report.termination.kind == "diverged",
        "second_iterate": values[1] == -6.0 if len(values) > 1 else False,
        "third_iterate": values[2] == 186.0 if len(values) > 2 else False,
        "growth_bound": bool(all(growth)),
    }
    return DivergenceVerdict(
        passed=all(checks.values()),
        checks=checks,
        iterate_values=values,
        diverged_at=ks[-1],
        report=report,
    )


# ---------------------------------------------------------------------------
# Convergence-rate study.
# ---------------------------------------------------------------------------

RATE_SQRT_LOG_OVER_K = "sqrt-log-over-k"  # p = 1
RATE_POWER_HALF_MINUS_P = "power-half-minus-p"  # p in (1/2, 1)
RATE_POWER_MINUS_HALF_P = "power-minus-half-p"  # p in (0, 1/2]


def rate_regime(p: float) -> str:
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if p == 1.0:
        return RATE_SQRT_LOG_OVER_K
    if p > 0.5:
        return RATE_POWER_HALF_MINUS_P
    return RATE_POWER_MINUS_HALF_P


def rate_value(p: float, k) -> np.ndarray:
    """The theoretical rate function at index k, exactly as the bound states it."""
    k = np.asarray(k, dtype=float)
    regime = rate_regime(p)
    if regime == RATE_SQRT_LOG_OVER_K:
        return np.sqrt(np.log(k) / k)
    if regime == RATE_POWER_HALF_MINUS_P:
        return k ** (0.5 - p)
    return k ** (-p / 2.0)


def fit_loglog_slope(ks, errors) -> float:
    """Least-squares slope of log(error) against log(k)."""
    ks = np.asarray(ks, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if ks.size < 2:
        raise ValueError("need at least two samples to fit a slope")
    if np.any(errors <= 0.0):
        raise ValueError("slope fit needs strictly positive errors")
    return float(np.polyfit(np.log(ks), np.log(errors), 1)[0])


@dataclass(frozen=True)
class RateStudyResult:
    """Tail diagnostics of one variable-stepsize run against its rate bound.

    ``bound_constant`` is the max over the tail of error / rate; the rate
    functions carry no hidden constants, so only this ratio is meaningful.
    When the run hits the solution exactly the fit is undefined and
    ``converged_exactly`` is set instead.
    """

    p: float
    theoretical_rate: str
    fitted_slope: float | None
    bound_constant: float | None
    converged_exactly: bool
    ks: np.ndarray
    errors: np.ndarray
    tail_start: int


def rate_study(
    problem: ViProblem,
    x1,
    p_exponent: float,
    iters: int,
    tail_fraction: float = 0.5,
) -> RateStudyResult:
    """Run the variable-stepsize iteration and fit the tail decay.

    The operator must already be rescaled to modulus 1/2 (the rate analysis
    is normalized to that case) and the problem needs a bounded set and a
    reference solution.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must lie in (0, 1)")
    if problem.reference_solution is None:
        raise ValueError("rate study needs a reference solution")
    if not problem.set.is_bounded:
        raise UnboundedSetError("rate study needs a bounded set")
    declared = problem.operator.constants.gamma
    if declared is None or abs(declared - 0.5) > 1e-12:
        raise ValueError(
            "operator must be rescaled to modulus 1/2 before a rate study "
            "(see rescale_to_half_modulus)"
        )
    regime = rate_regime(p_exponent)
    report = gpm_variable(
        problem, x1, PSeries(p_exponent), StopCriteria(max_iters=iters, step_tol=0.0)
    )
    ks = np.array([row.k for row in report.iterates], dtype=float)
    errors = np.array([row.dist_to_reference for row in report.iterates], dtype=float)
    tail_start = len(ks) - max(int(math.ceil(tail_fraction * len(ks))), 1)
    if len(ks) - tail_start < 20:
        raise ValueError("tail window has fewer than 20 samples; raise iters")
    tail_ks = ks[tail_start:]
    tail_errors = errors[tail_start:]
    if np.any(tail_errors == 0.0):
        return RateStudyResult(
            p=p_exponent,
            theoretical_rate=regime,
            fitted_slope=None,
            bound_constant=None,
            converged_exactly=True,
            ks=ks,
            errors=errors,
            tail_start=tail_start,
        )
    slope = fit_loglog_slope(tail_ks, tail_errors)
    constant = float(np.max(tail_errors / rate_value(p_exponent, tail_ks)))
    return RateStudyResult(
        p=p_exponent,
        theoretical_rate=regime,
        fitted_slope=slope,
        bound_constant=constant,
        converged_exactly=False,
        ks=ks,
        errors=errors,
        tail_start=tail_start,
    )


def tail_ratio_max(result: RateStudyResult, last_fraction: float) -> float:
    """Max of error / rate over the trailing ``last_fraction`` of recorded iterates."""
    if not 0.0 < last_fraction <= 1.0:
        raise ValueError("last_fraction must lie in (0, 1]")
    n = len(result.ks)
    start = n - max(int(math.ceil(last_fraction * n)), 1)
    ks = result.ks[start:]
    errors = result.errors[start:]
    return float(np.max(errors / rate_value(result.p, ks)))


# ---------------------------------------------------------------------------
# Descent inequality and bound-validity sweeps.
# ---------------------------------------------------------------------------


def descent_inequality_max_violation(
    report: SolveReport, gamma: float, value_bound: float
) -> float:
    """Worst violation of a_{k+1} <= (1 - 2 lam_k gamma) a_k + M^2 lam_k^2.

    ``a_k`` is the squared distance to the reference; only consecutive
    recorded iterations can be checked, so run with a full trace for a
    complete scan.  Returns the most positive violation (<= 0 means the
    inequality held everywhere).
    """
    rows = report.iterates
    worst = -math.inf
    checked = 0
    for current, nxt in zip(rows, rows[1:]):
        if nxt.k != current.k + 1:
            continue
        if current.dist_to_reference is None or nxt.dist_to_reference is None:
            raise ValueError("descent check needs a reference solution in the trace")
        a_k = current.dist_to_reference**2
        a_next = nxt.dist_to_reference**2
        lam = current.stepsize
        bound = (1.0 - 2.0 * lam * gamma) * a_k + (value_bound * lam) ** 2
        worst = max(worst, a_next - bound)
        checked += 1
    if checked == 0:
        raise ValueError("trace has no consecutive iterations to check")
    return worst


@dataclass(frozen=True)
class BoundSweepResult:
    name: str
    points: int
    max_violation_normal: float
    max_violation_natural: float | None  # None when the operator is not Lipschitz
    max_violation_interior: float


def bound_validity_sweep(
    entries: list[CatalogEntry] | None = None,
    points_per_problem: int = 1000,
    seed: int = 0,
) -> list[BoundSweepResult]:
    """Check every certificate radius against the true distance to the solution.

    For each catalog problem, random points are drawn in an enclosing box
    (normal-map bound, valid anywhere) and projected onto the set (natural-map
    and interior bounds, valid on K).  Violations are ``true distance -
    radius`` clipped at zero, so anything above ~1e-9 is a bug.
    """
    if entries is None:
        entries = catalog()
    results = []
    for index, entry in enumerate(entries):
        problem = entry.problem
        solution = problem.reference_solution
        rng = np.random.default_rng(seed + index)
        lo, hi = problem.set.bounding_box()
        width = np.where(np.isfinite(hi - lo), hi - lo, 2.0)
        lo = np.where(np.isfinite(lo), lo, -1.0) - width
        hi = np.where(np.isfinite(hi), hi, 1.0) + width
        worst_normal = 0.0
        worst_natural = 0.0 if entry.lipschitz is not None else None
        worst_interior = 0.0
        for _ in range(points_per_problem):
            x = rng.uniform(lo, hi)
            cert = error_bound_normal(problem, x, entry.gamma)
            dist = float(np.linalg.norm(solution - cert.anchor))
            worst_normal = max(worst_normal, dist - cert.radius)
            inside = problem.set.project(x)
            cert = error_bound_interior(problem, inside, entry.gamma)
            dist = float(np.linalg.norm(solution - inside))
            worst_interior = max(worst_interior, dist - cert.radius)
            if entry.lipschitz is not None:
                cert = error_bound_natural(problem, inside, entry.gamma, entry.lipschitz)
                worst_natural = max(worst_natural, dist - cert.radius)
        results.append(
            BoundSweepResult(
                name=entry.name,
                points=points_per_problem,
                max_violation_normal=max(0.0, worst_normal),
                max_violation_natural=(
                    None if worst_natural is None else max(0.0, worst_natural)
                ),
                max_violation_interior=max(0.0, worst_interior),
            )
        )
    return results
