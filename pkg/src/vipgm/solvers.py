"""Projected gradient iterations for variational inequalities.

All solvers run the update x_{k+1} = pr_K(x_k - lambda_k F(x_k)) starting at
k = 1 and differ only in where lambda_k comes from and on which set they
project:

  gpm_constant    fixed stepsize (classical scheme, needs Lipschitz theory)
  gpm_variable    diminishing non-summable stepsizes on a bounded set
  gpm_unbounded   restricts an unbounded set to the ball that the interior
                  residual bound guarantees to contain the solution, then
                  runs the variable-stepsize scheme on the restriction

A solve is single-threaded and fully deterministic; solves over immutable
problems may run concurrently without shared state.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .convex_sets import as_vector, intersect_with_ball
from .vi import MEMBERSHIP_TOL, ViProblem

logger = logging.getLogger(__name__)

DEFAULT_STEP_TOL = 1e-12
DEFAULT_DIVERGENCE_RADIUS = 1e12

# Traces of very long runs keep roughly this many rows (plus the final one).
TRACE_TARGET_ROWS = 10_000


class ScheduleConditionError(ValueError):
    """The stepsize schedule violates the variable-stepsize data conditions."""


@dataclass(frozen=True)
class Constant:
    """lambda_k = value for all k."""

    value: float

    def __post_init__(self):
        if not float(self.value) > 0:
            raise ValueError("stepsize must be positive")
        object.__setattr__(self, "value", float(self.value))

    is_diminishing = False
    is_summable = False

    def stepsize(self, k: int) -> float:
        _check_index(k)
        return self.value


@dataclass(frozen=True)
class PSeries:
    """lambda_k = 1 / k**p with p in (0, 1], hence diminishing and non-summable."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if not 0.0 < p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        object.__setattr__(self, "p", p)

    is_diminishing = True
    is_summable = False

    def stepsize(self, k: int) -> float:
        _check_index(k)
        return float(k) ** -self.p


def harmonic() -> PSeries:
    """lambda_k = 1/k, the p-series with p = 1."""
    return PSeries(1.0)


@dataclass(frozen=True)
class CustomSchedule:
    """An explicit positive sequence with declared summability properties.

    The declared flags gate admission to the variable-stepsize solver; they
    are trusted, not verified.
    """

    values: Callable[[int], float]
    summable: bool | None = None
    diminishing: bool | None = None

    is_summable = property(lambda self: self.summable)
    is_diminishing = property(lambda self: self.diminishing)

    def stepsize(self, k: int) -> float:
        _check_index(k)
        value = float(self.values(k))
        if not value > 0:
            raise ValueError(f"custom schedule produced a non-positive stepsize at k={k}")
        return value


StepsizeSchedule = Constant | PSeries | CustomSchedule


def _check_index(k: int) -> None:
    if k < 1:
        raise ValueError("iteration index starts at 1")


def stepsize(schedule: StepsizeSchedule, k: int) -> float:
    """The exact value lambda_k of a schedule."""
    return schedule.stepsize(k)


def _require_diminishing_nonsummable(schedule: StepsizeSchedule) -> None:
    if schedule.is_diminishing is not True or schedule.is_summable is not False:
        raise ScheduleConditionError(
            "variable-stepsize iteration needs a schedule that is declared "
            "diminishing (lambda_k -> 0) and non-summable (sum lambda_k = inf); "
            f"got {schedule!r}"
        )


@dataclass(frozen=True)
class StopCriteria:
    """Termination rules shared by all solvers.

    The textbook check "x_{k+1} = x_k" is replaced by a step-norm tolerance
    since exact floating-point equality almost never occurs, plus an optional
    interior-residual tolerance (needs a modulus gamma) and an iteration cap.
    Divergence is declared when an iterate norm exceeds ``divergence_radius``
    or the operator overflows.
    """

    max_iters: int
    step_tol: float = DEFAULT_STEP_TOL
    residual_tol: float | None = None
    divergence_radius: float = DEFAULT_DIVERGENCE_RADIUS

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        if self.step_tol < 0:
            raise ValueError("step_tol must be nonnegative")
        if self.residual_tol is not None and self.residual_tol < 0:
            raise ValueError("residual_tol must be nonnegative")
        if not self.divergence_radius > 0:
            raise ValueError("divergence_radius must be positive")


@dataclass(frozen=True)
class Termination:
    kind: str  # "converged" | "max-iters" | "diverged"
    by: str | None = None  # for converged: "step" | "residual"
    reason: str | None = None  # for diverged

    @property
    def converged(self) -> bool:
        return self.kind == "converged"

    @property
    def label(self) -> str:
        return {"converged": "Converged", "max-iters": "MaxIters", "diverged": "Diverged"}[
            self.kind
        ]


@dataclass(frozen=True)
class TraceRecord:
    """State of iteration k: the iterate x_k, the stepsize lambda_k used to
    leave it, and the length of that step."""

    k: int
    stepsize: float
    point: np.ndarray
    step_norm: float
    dist_to_reference: float | None
    interior_radius: float | None


@dataclass(frozen=True)
class SolveReport:
    iterates: tuple[TraceRecord, ...]
    termination: Termination
    final_point: np.ndarray
    wall_time: float
    restriction_radius: float | None = None

    @property
    def iterations(self) -> int:
        return self.iterates[-1].k

    def final_distance_to_reference(self, reference) -> float:
        return float(np.linalg.norm(self.final_point - as_vector(reference)))


def _trace_stride(max_iters: int, trace_every: int | None) -> int:
    if trace_every is not None:
        if trace_every < 1:
            raise ValueError("trace_every must be >= 1")
        return int(trace_every)
    if max_iters <= TRACE_TARGET_ROWS:
        return 1
    return math.ceil(max_iters / TRACE_TARGET_ROWS)


def _run_projected_iteration(
    problem: ViProblem,
    x1,
    schedule: StepsizeSchedule,
    stop: StopCriteria,
    gamma: float | None,
    trace_every: int | None,
) -> SolveReport:
    start_time = time.perf_counter()
    x = as_vector(x1, problem.dim).copy()
    if problem.set.violation(x) > MEMBERSHIP_TOL:
        raise ValueError("starting point must lie in the constraint set")
    if gamma is None:
        gamma = problem.operator.constants.gamma
    if stop.residual_tol is not None and gamma is None:
        raise ValueError("residual stopping needs a modulus gamma (declared or passed)")

    reference = problem.reference_solution
    stride = _trace_stride(stop.max_iters, trace_every)
    rows: list[TraceRecord] = []

    def record(k: int, lam: float, point: np.ndarray, step: float, fx_norm: float | None):
        row = TraceRecord(
            k=k,
            stepsize=lam,
            point=point.copy(),
            step_norm=step,
            dist_to_reference=(
                None if reference is None else float(np.linalg.norm(point - reference))
            ),
            interior_radius=(
                None if (gamma is None or fx_norm is None) else fx_norm / gamma
            ),
        )
        if (k - 1) % stride == 0:
            rows.append(row)
        return row

    last_row = None
    termination = None
    final = x

    for k in range(1, stop.max_iters + 1):
        lam = schedule.stepsize(k)
        fx = problem.operator.evaluate(x)
        if not np.all(np.isfinite(fx)):
            last_row = record(k, lam, x, math.inf, None)
            termination = Termination("diverged", reason="operator overflow sentinel")
            final = x
            break
        fx_norm = float(np.linalg.norm(fx))
        if (
            stop.residual_tol is not None
            and gamma is not None
            and fx_norm / gamma <= stop.residual_tol
        ):
            last_row = record(k, lam, x, 0.0, fx_norm)
            termination = Termination("converged", by="residual")
            final = x
            break
        x_next = problem.set.project(x - lam * fx)
        step = float(np.linalg.norm(x_next - x))
        last_row = record(k, lam, x, step, fx_norm)
        if float(np.linalg.norm(x_next)) > stop.divergence_radius:
            termination = Termination(
                "diverged", reason="iterate norm exceeded the divergence radius"
            )
            final = x_next
            break
        x = x_next
        if step <= stop.step_tol:
            termination = Termination("converged", by="step")
            final = x
            break

    if termination is None:
        termination = Termination("max-iters")
        final = x

    if rows and last_row is not None and rows[-1].k != last_row.k:
        rows.append(last_row)

    return SolveReport(
        iterates=tuple(rows),
        termination=termination,
        final_point=final,
        wall_time=time.perf_counter() - start_time,
    )


def gpm_constant(
    problem: ViProblem,
    x1,
    lam: float,
    stop: StopCriteria,
    trace_every: int | None = None,
) -> SolveReport:
    """Projected iteration with a constant stepsize.

    The classical theory guarantees convergence only for lam in
    (0, 2*gamma/L^2); when both constants are declared and the window is
    violated a warning is logged, but the run proceeds (counterexample studies
    deliberately leave the guaranteed regime).
    """
    lam = float(lam)
    if not lam > 0:
        raise ValueError("stepsize must be positive")
    constants = problem.operator.constants
    if constants.gamma is not None and constants.lipschitz is not None:
        limit = 2.0 * constants.gamma / constants.lipschitz**2
        if not lam < limit:
            logger.warning(
                "constant stepsize %g outside the guaranteed window (0, %g)", lam, limit
            )
    return _run_projected_iteration(problem, x1, Constant(lam), stop, None, trace_every)


def gpm_variable(
    problem: ViProblem,
    x1,
    schedule: StepsizeSchedule,
    stop: StopCriteria,
    gamma: float | None = None,
    trace_every: int | None = None,
) -> SolveReport:
    """Projected iteration with diminishing non-summable stepsizes.

    Converges to the unique solution for continuous strongly pseudomonotone
    operators on bounded sets without knowing any constants.
    """
    _require_diminishing_nonsummable(schedule)
    return _run_projected_iteration(problem, x1, schedule, stop, gamma, trace_every)


def gpm_unbounded(
    problem: ViProblem,
    x1,
    gamma: float,
    schedule: StepsizeSchedule,
    stop: StopCriteria,
    trace_every: int | None = None,
) -> SolveReport:
    """Variable-stepsize iteration on an unbounded set via ball restriction.

    The interior residual bound puts the solution inside the closed ball of
    radius ||F(x1)||/gamma around x1, so the problem restricted to
    K' = K intersected with that ball has the same unique solution and a
    bounded constraint set.  If F(x1) = 0 then x1 already solves the problem.
    """
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    _require_diminishing_nonsummable(schedule)
    start_time = time.perf_counter()
    x = as_vector(x1, problem.dim).copy()
    if problem.set.violation(x) > MEMBERSHIP_TOL:
        raise ValueError("starting point must lie in the constraint set")
    fx = problem.operator.evaluate(x)
    fx_norm = float(np.linalg.norm(fx))
    if fx_norm == 0.0:
        reference = problem.reference_solution
        row = TraceRecord(
            k=1,
            stepsize=schedule.stepsize(1),
            point=x.copy(),
            step_norm=0.0,
            dist_to_reference=(
                None if reference is None else float(np.linalg.norm(x - reference))
            ),
            interior_radius=0.0,
        )
        return SolveReport(
            iterates=(row,),
            termination=Termination("converged", by="step"),
            final_point=x,
            wall_time=time.perf_counter() - start_time,
            restriction_radius=0.0,
        )

    radius = fx_norm / gamma
    restricted = ViProblem(
        set=intersect_with_ball(problem.set, x, radius),
        operator=problem.operator,
        reference_solution=problem.reference_solution,
    )
    report = gpm_variable(restricted, x, schedule, stop, gamma=gamma, trace_every=trace_every)
    return SolveReport(
        iterates=report.iterates,
        termination=report.termination,
        final_point=report.final_point,
        wall_time=time.perf_counter() - start_time,
        restriction_radius=radius,
    )


# ---------------------------------------------------------------------------
# Trace serialization.
# ---------------------------------------------------------------------------


def _fmt(value: float | None) -> str:
    # repr of a Python float is the shortest representation that round-trips,
    # which keeps traces byte-reproducible.
    return "" if value is None else repr(float(value))


def write_trace_csv(report: SolveReport, path) -> None:
    """Write the iterate trace with one row per recorded iteration."""
    dim = report.final_point.size
    header = (
        ["k", "lambda"]
        + [f"x{i}" for i in range(dim)]
        + ["step_norm", "dist_ref", "interior_radius"]
    )
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in report.iterates:
            writer.writerow(
                [str(row.k), _fmt(row.stepsize)]
                + [_fmt(v) for v in row.point]
                + [_fmt(row.step_norm), _fmt(row.dist_to_reference), _fmt(row.interior_radius)]
            )
