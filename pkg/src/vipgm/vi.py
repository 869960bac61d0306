"""Variational inequality problems, residual maps and error bounds.

For a problem VI(K, F), find x* in K with <F(x*), x - x*> >= 0 for all x in K,
two residual maps characterize solutions:

  natural map   x - pr_K(x - F(x)),    zero exactly at solutions (x in K);
  normal map    F(pr_K(x)) + x - pr_K(x),  its zeros project onto solutions.

Three computable radii bound the distance to the unique solution of a
strongly pseudomonotone problem with modulus gamma:

  natural-map bound     ||x - x*||        <= (L+1)/gamma * ||natural(x)||
                        (needs Lipschitz F, x in K)
  normal-map bound      ||x* - pr_K(x)||  <= ||normal(x)|| / gamma
                        (any x, no Lipschitz constant)
  interior residual     ||x* - x||        <= ||F(x)|| / gamma
                        (x in K; the normal-map bound specialized to K)

All functions here are pure over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex_sets import ConvexSet, as_vector, fields_equal
from .operators import Operator

# Absolute constraint-violation tolerance for "x lies in K" preconditions.
# Projections introduce rounding near 1e-15 and solvers stop near 1e-12, so
# this sits comfortably above both.
MEMBERSHIP_TOL = 1e-9

# Reference solutions are usually numerical oracles themselves, so they are
# admitted with a residual safely above solver tolerances.
REFERENCE_RESIDUAL_TOL = 1e-8

KIND_NATURAL = "natural-map"
KIND_NORMAL = "normal-map"
KIND_INTERIOR = "interior-residual"


@dataclass(frozen=True, eq=False)
class ViProblem:
    """A variational inequality VI(K, F) with an optional known solution."""

    set: ConvexSet
    operator: Operator
    reference_solution: np.ndarray | None = None

    def __post_init__(self):
        if self.set.dim != self.operator.dim:
            raise ValueError(
                f"set dimension {self.set.dim} != operator dimension {self.operator.dim}"
            )
        if self.reference_solution is not None:
            ref = as_vector(self.reference_solution, self.set.dim)
            object.__setattr__(self, "reference_solution", ref)
            residual = float(np.linalg.norm(natural_map(self, ref)))
            if residual > REFERENCE_RESIDUAL_TOL:
                raise ValueError(
                    f"reference solution has natural-map residual {residual:.3e} "
                    f"> {REFERENCE_RESIDUAL_TOL}"
                )

    @property
    def dim(self) -> int:
        return self.set.dim

    def __eq__(self, other):
        if not isinstance(other, ViProblem):
            return NotImplemented
        return fields_equal(self, other)

    __hash__ = None


def _require_membership(problem: ViProblem, x: np.ndarray) -> None:
    violation = problem.set.violation(x)
    if violation > MEMBERSHIP_TOL:
        raise ValueError(
            f"point lies outside the constraint set (violation {violation:.3e})"
        )


def natural_map(problem: ViProblem, x) -> np.ndarray:
    """x - pr_K(x - F(x)); requires x in K up to the membership tolerance."""
    x = as_vector(x, problem.dim)
    _require_membership(problem, x)
    return x - problem.set.project(x - problem.operator.evaluate(x))


def normal_map(problem: ViProblem, x) -> np.ndarray:
    """F(pr_K(x)) + x - pr_K(x); defined on all of R^n."""
    x = as_vector(x, problem.dim)
    projected = problem.set.project(x)
    return problem.operator.evaluate(projected) + x - projected


def is_solution(problem: ViProblem, x, tol: float) -> bool:
    """True iff the natural-map residual at x (a point of K) is at most tol."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return float(np.linalg.norm(natural_map(problem, x))) <= tol


@dataclass(frozen=True, eq=False)
class ErrorBoundCertificate:
    """An evaluated residual with the distance radius it certifies.

    ``anchor`` is the point whose distance to the solution is bounded by
    ``radius``: the evaluation point itself for the natural-map and interior
    bounds, its projection onto K for the normal-map bound.
    ``constants_source`` records whether gamma (and the Lipschitz constant)
    came from the operator's declared constants or from the caller.
    """

    kind: str
    evaluation_point: np.ndarray
    residual_norm: float
    radius: float
    anchor: np.ndarray
    gamma: float
    lipschitz: float | None
    constants_source: str

    def __eq__(self, other):
        if not isinstance(other, ErrorBoundCertificate):
            return NotImplemented
        return fields_equal(self, other)

    __hash__ = None


def _resolve_gamma(problem: ViProblem, gamma: float | None) -> tuple[float, str]:
    if gamma is not None:
        gamma = float(gamma)
        if not gamma > 0:
            raise ValueError("gamma must be positive")
        return gamma, "caller"
    declared = problem.operator.constants.gamma
    if declared is None:
        raise ValueError(
            "no strong pseudomonotonicity modulus: declare one on the operator "
            "or pass gamma explicitly"
        )
    return declared, "declared"


def _resolve_lipschitz(problem: ViProblem, lipschitz: float | None) -> tuple[float, str]:
    if lipschitz is not None:
        lipschitz = float(lipschitz)
        if not lipschitz > 0:
            raise ValueError("lipschitz must be positive")
        return lipschitz, "caller"
    declared = problem.operator.constants.lipschitz
    if declared is None:
        raise ValueError(
            "no Lipschitz constant: declare one on the operator or pass it explicitly"
        )
    return declared, "declared"


def error_bound_natural(
    problem: ViProblem, x, gamma: float | None = None, lipschitz: float | None = None
) -> ErrorBoundCertificate:
    """Distance bound (L+1)/gamma * ||natural(x)|| at a point x of K."""
    x = as_vector(x, problem.dim)
    gamma, gamma_source = _resolve_gamma(problem, gamma)
    lipschitz, lipschitz_source = _resolve_lipschitz(problem, lipschitz)
    residual = float(np.linalg.norm(natural_map(problem, x)))
    source = gamma_source if gamma_source == lipschitz_source else "mixed"
    return ErrorBoundCertificate(
        kind=KIND_NATURAL,
        evaluation_point=x.copy(),
        residual_norm=residual,
        radius=(lipschitz + 1.0) / gamma * residual,
        anchor=x.copy(),
        gamma=gamma,
        lipschitz=lipschitz,
        constants_source=source,
    )


def error_bound_normal(
    problem: ViProblem, x, gamma: float | None = None
) -> ErrorBoundCertificate:
    """Distance bound ||normal(x)|| / gamma, valid at every x in R^n."""
    x = as_vector(x, problem.dim)
    gamma, source = _resolve_gamma(problem, gamma)
    residual = float(np.linalg.norm(normal_map(problem, x)))
    return ErrorBoundCertificate(
        kind=KIND_NORMAL,
        evaluation_point=x.copy(),
        residual_norm=residual,
        radius=residual / gamma,
        anchor=problem.set.project(x),
        gamma=gamma,
        lipschitz=None,
        constants_source=source,
    )


def error_bound_interior(
    problem: ViProblem, x, gamma: float | None = None
) -> ErrorBoundCertificate:
    """Distance bound ||F(x)|| / gamma at a point x of K.

    This is the normal-map bound specialized to points of K, where the
    projection is the identity and the normal map reduces to F itself.
    """
    x = as_vector(x, problem.dim)
    _require_membership(problem, x)
    gamma, source = _resolve_gamma(problem, gamma)
    residual = float(np.linalg.norm(problem.operator.evaluate(x)))
    return ErrorBoundCertificate(
        kind=KIND_INTERIOR,
        evaluation_point=x.copy(),
        residual_norm=residual,
        radius=residual / gamma,
        anchor=x.copy(),
        gamma=gamma,
        lipschitz=None,
        constants_source=source,
    )
