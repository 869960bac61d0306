"""Gradient projection methods and error bounds for variational inequalities.

The problem VI(K, F) is to find x* in a closed convex set K with
<F(x*), x - x*> >= 0 for every x in K.  This package provides projectable
set primitives, a closed catalog of operator families with sampled constant
estimates, natural/normal-map residuals with distance bounds, projected
gradient solvers with constant and diminishing stepsizes, brute-force
solution oracles, and convergence-rate studies.
"""

from .convex_sets import (
    Ball,
    Box,
    ConvexSet,
    DimensionMismatchError,
    DykstraConvergenceError,
    FullSpace,
    Halfspace,
    Intersection,
    Simplex,
    UnboundedSetError,
    as_vector,
    intersect_with_ball,
)
from .operators import (
    Affine,
    ExpGrowth1D,
    Operator,
    OperatorConstants,
    ScaledAffine,
    SqrtSign1D,
    UniformlyScaled,
    estimate_lipschitz,
    estimate_strong_monotonicity,
    estimate_strong_pseudomonotonicity,
    rescale_to_half_modulus,
    value_bound,
)
from .solvers import (
    Constant,
    CustomSchedule,
    PSeries,
    ScheduleConditionError,
    SolveReport,
    StopCriteria,
    Termination,
    TraceRecord,
    gpm_constant,
    gpm_unbounded,
    gpm_variable,
    harmonic,
    stepsize,
    write_trace_csv,
)
from .vi import (
    ErrorBoundCertificate,
    ViProblem,
    error_bound_interior,
    error_bound_natural,
    error_bound_normal,
    is_solution,
    natural_map,
    normal_map,
)

__all__ = [
    "Affine",
    "Ball",
    "Box",
    "Constant",
    "ConvexSet",
    "CustomSchedule",
    "DimensionMismatchError",
    "DykstraConvergenceError",
    "ErrorBoundCertificate",
    "ExpGrowth1D",
    "FullSpace",
    "Halfspace",
    "Intersection",
    "Operator",
    "OperatorConstants",
    "PSeries",
    "ScaledAffine",
    "ScheduleConditionError",
    "Simplex",
    "SolveReport",
    "SqrtSign1D",
    "StopCriteria",
    "Termination",
    "TraceRecord",
    "UnboundedSetError",
    "UniformlyScaled",
    "ViProblem",
    "as_vector",
    "error_bound_interior",
    "error_bound_natural",
    "error_bound_normal",
    "estimate_lipschitz",
    "estimate_strong_monotonicity",
    "estimate_strong_pseudomonotonicity",
    "gpm_constant",
    "gpm_unbounded",
    "gpm_variable",
    "harmonic",
    "intersect_with_ball",
    "is_solution",
    "natural_map",
    "normal_map",
    "rescale_to_half_modulus",
    "stepsize",
    "value_bound",
    "write_trace_csv",
]
