"""Operator families for variational inequalities and sampled constant estimates.

The catalog is closed: affine maps, a square-root sign map on the line (strongly
monotone but not Lipschitz near 0), an exponentially growing map on the line
(strongly monotone, blows up on unbounded domains), and affine maps multiplied
by a positive scalar field (strongly pseudomonotone without being strongly
monotone in general).

Operators are immutable and ``evaluate`` is pure.  The estimators draw their
own seeded generator per call, so concurrent calls with distinct seeds are
independent.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .convex_sets import (
    Ball,
    Box,
    ConvexSet,
    Halfspace,
    Intersection,
    UnboundedSetError,
    as_vector,
    fields_equal,
)


class OverflowSentinel:
    """Marker namespace: an evaluation that overflows returns signed infinity.

    Callers must treat a non-finite operator value as divergence of the
    surrounding iteration, never as a usable vector.
    """

    @staticmethod
    def present(value: np.ndarray) -> bool:
        return not bool(np.all(np.isfinite(value)))


@dataclass(frozen=True)
class OperatorConstants:
    """Optional declared constants of an operator.

    gamma        strong pseudomonotonicity modulus
    lipschitz    Lipschitz constant on the domain of interest
    value_bound  bound on the operator norm over the domain of interest
    """

    gamma: float | None = None
    lipschitz: float | None = None
    value_bound: float | None = None

    def __post_init__(self):
        for name in ("gamma", "lipschitz", "value_bound"):
            v = getattr(self, name)
            if v is not None:
                v = float(v)
                if not v > 0:
                    raise ValueError(f"declared {name} must be positive")
                object.__setattr__(self, name, v)


@dataclass(frozen=True, eq=False)
class Operator:
    """Base class of the operator catalog."""

    constants: OperatorConstants = field(default_factory=OperatorConstants, kw_only=True)

    # False only for families with no finite Lipschitz constant on bounded sets.
    lipschitz_is_finite = True

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def evaluate(self, x) -> np.ndarray:
        raise NotImplementedError

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Row-wise evaluation of an (m, dim) array; subclasses vectorize."""
        return np.stack([self.evaluate(p) for p in points])

    def __eq__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return fields_equal(self, other)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Affine(Operator):
    """F(x) = A x + b with a square matrix A."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        offset = as_vector(self.offset)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("matrix must be square")
        if matrix.shape[0] != offset.size:
            raise ValueError("matrix and offset dimensions differ")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix has non-finite entries")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "offset", offset)

    @property
    def dim(self) -> int:
        return self.offset.size

    def evaluate(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        return self.matrix @ x + self.offset

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return points @ self.matrix.T + self.offset


@dataclass(frozen=True, eq=False)
class SqrtSign1D(Operator):
    """F(x) = 2 sqrt(x) for x >= 0 and -2 sqrt(-x) for x < 0, on the line.

    Strongly monotone with modulus 1 on [-1, 1], but the difference quotient
    blows up at 0, so no finite Lipschitz constant exists there.
    """

    lipschitz_is_finite = False

    @property
    def dim(self) -> int:
        return 1

    def evaluate(self, x) -> np.ndarray:
        v = float(as_vector(x, 1)[0])
        out = 2.0 * math.sqrt(v) if v >= 0 else -2.0 * math.sqrt(-v)
        return np.array([out])

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return np.where(points >= 0, 2.0 * np.sqrt(np.abs(points)), -2.0 * np.sqrt(np.abs(points)))


@dataclass(frozen=True, eq=False)
class ExpGrowth1D(Operator):
    """F(x) = 2^|x| * x on the line.

    Strongly monotone with modulus 1.  When 2^|x| * |x| exceeds the largest
    float the evaluation saturates to signed infinity (overflow sentinel).
    """

    @property
    def dim(self) -> int:
        return 1

    def evaluate(self, x) -> np.ndarray:
        v = float(as_vector(x, 1)[0])
        with np.errstate(over="ignore"):
            return np.array([float(np.exp2(abs(v))) * v])

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp2(np.abs(points)) * points


SCALING_KINDS = ("constant", "one_plus_norm_sq", "two_plus_sin_first")


@dataclass(frozen=True, eq=False)
class ScaledAffine(Operator):
    """F(x) = c(x) (A x + b) for a positive scalar field c from a fixed catalog.

    c is bounded below by ``c_min`` > 0, so the strong pseudomonotonicity
    modulus of F is at least ``c_min`` times the strong monotonicity modulus
    of A, while F itself need not be strongly monotone.
    """

    matrix: np.ndarray
    offset: np.ndarray
    scaling: str
    scale_value: float = 1.0  # only used by the "constant" scaling

    def __post_init__(self):
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        offset = as_vector(self.offset)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("matrix must be square")
        if matrix.shape[0] != offset.size:
            raise ValueError("matrix and offset dimensions differ")
        if self.scaling not in SCALING_KINDS:
            raise ValueError(f"unknown scaling {self.scaling!r}; pick one of {SCALING_KINDS}")
        if self.scaling == "constant" and not float(self.scale_value) > 0:
            raise ValueError("constant scaling requires a positive scale_value")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "scale_value", float(self.scale_value))

    @property
    def dim(self) -> int:
        return self.offset.size

    @property
    def c_min(self) -> float:
        if self.scaling == "constant":
            return self.scale_value
        # 1 + ||x||^2 >= 1 and 2 + sin(x_0) >= 1
        return 1.0

    def scale_at(self, x) -> float:
        x = as_vector(x, self.dim)
        if self.scaling == "constant":
            return self.scale_value
        if self.scaling == "one_plus_norm_sq":
            return 1.0 + float(x @ x)
        return 2.0 + float(np.sin(x[0]))

    def evaluate(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        return self.scale_at(x) * (self.matrix @ x + self.offset)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        if self.scaling == "constant":
            scales = np.full(points.shape[0], self.scale_value)
        elif self.scaling == "one_plus_norm_sq":
            scales = 1.0 + np.einsum("ij,ij->i", points, points)
        else:
            scales = 2.0 + np.sin(points[:, 0])
        return scales[:, None] * (points @ self.matrix.T + self.offset)


@dataclass(frozen=True, eq=False)
class UniformlyScaled(Operator):
    """F(x) = factor * base(x) for a fixed factor > 0.

    Exists so that non-affine operators can be rescaled while keeping the
    solution set of the variational inequality unchanged.
    """

    base: Operator
    factor: float

    def __post_init__(self):
        if not float(self.factor) > 0:
            raise ValueError("factor must be positive")
        object.__setattr__(self, "factor", float(self.factor))

    @property
    def lipschitz_is_finite(self) -> bool:  # type: ignore[override]
        return self.base.lipschitz_is_finite

    @property
    def dim(self) -> int:
        return self.base.dim

    def evaluate(self, x) -> np.ndarray:
        return self.factor * self.base.evaluate(x)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return self.factor * self.base.evaluate_many(points)


def rescale_to_half_modulus(op: Operator, gamma: float) -> Operator:
    """Divide ``op`` by 2*gamma so the rescaled modulus becomes 1/2.

    ``gamma`` must be a true strong pseudomonotonicity modulus of ``op``.  The
    solution set of the variational inequality is unchanged; declared Lipschitz
    and value bounds are scaled along.
    """
    gamma = float(gamma)
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    factor = 1.0 / (2.0 * gamma)
    old = op.constants
    constants = OperatorConstants(
        gamma=0.5,
        lipschitz=None if old.lipschitz is None else old.lipschitz * factor,
        value_bound=None if old.value_bound is None else old.value_bound * factor,
    )
    if isinstance(op, Affine):
        return Affine(op.matrix * factor, op.offset * factor, constants=constants)
    if isinstance(op, ScaledAffine):
        return ScaledAffine(
            op.matrix * factor,
            op.offset * factor,
            op.scaling,
            op.scale_value,
            constants=constants,
        )
    if isinstance(op, UniformlyScaled):
        return UniformlyScaled(op.base, op.factor * factor, constants=constants)
    if factor == 1.0:
        return dataclasses.replace(op, constants=constants)
    return UniformlyScaled(op, factor, constants=constants)


# ---------------------------------------------------------------------------
# Sampled constant estimates.
#
# These are one-sided diagnostics, not certificates: monotonicity moduli come
# out as upper estimates (a minimum over sampled pairs), Lipschitz constants as
# lower estimates (a maximum over sampled pairs).
# ---------------------------------------------------------------------------

_MAX_REJECTION_ROUNDS = 1000


def _membership_mask(region: ConvexSet, batch: np.ndarray) -> np.ndarray:
    if isinstance(region, Box):
        return np.all((batch >= region.lower) & (batch <= region.upper), axis=1)
    if isinstance(region, Ball):
        return np.linalg.norm(batch - region.center, axis=1) <= region.radius
    if isinstance(region, Halfspace):
        return batch @ region.normal <= region.offset
    if isinstance(region, Intersection):
        mask = np.ones(batch.shape[0], dtype=bool)
        for member in region.members:
            mask &= _membership_mask(member, batch)
        return mask
    return np.array([region.contains(row, 0.0) for row in batch])


def _sample_points(region: ConvexSet, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points of ``region``: uniform on its bounding box, rejected into it."""
    if not region.is_bounded:
        raise UnboundedSetError("estimators require a bounded region")
    lo, hi = region.bounding_box()
    chunks: list[np.ndarray] = []
    have = 0
    for _ in range(_MAX_REJECTION_ROUNDS):
        batch = rng.uniform(lo, hi, size=(max(count - have, 1) * 2, region.dim))
        accepted = batch[_membership_mask(region, batch)]
        if accepted.shape[0]:
            chunks.append(accepted)
            have += accepted.shape[0]
        if have >= count:
            return np.concatenate(chunks)[:count]
    raise ValueError("rejection sampling failed; the region has (near-)zero volume")


def _sampled_pairs(op: Operator, region: ConvexSet, samples: int, seed: int):
    """Sampled points, their operator values, and consecutive-pair geometry.

    Pair i compares x = points[i] against y = points[i+1]; each point is
    evaluated once and reused by both pairs touching it.
    """
    if samples < 2:
        raise ValueError("need at least two sample points")
    rng = np.random.default_rng(seed)
    points = _sample_points(region, samples, rng)
    values = op.evaluate_many(points)
    differences = points[:-1] - points[1:]
    gaps_sq = np.einsum("ij,ij->i", differences, differences)
    return points, values, differences, gaps_sq


def estimate_strong_monotonicity(op: Operator, region: ConvexSet, samples: int, seed: int) -> float:
    """Min over sampled pairs of <F(x)-F(y), x-y> / ||x-y||^2."""
    _, values, d, q = _sampled_pairs(op, region, samples, seed)
    valid = q > 0.0
    if not np.any(valid):
        return math.inf
    quotients = np.einsum("ij,ij->i", values[:-1] - values[1:], d)[valid] / q[valid]
    return float(np.min(quotients))


def estimate_strong_pseudomonotonicity(op: Operator, region: ConvexSet, samples: int, seed: int) -> float:
    """Min of <F(x), x-y> / ||x-y||^2 over sampled pairs with <F(y), x-y> >= 0.

    Pairs failing the premise are skipped; returns ``inf`` when no sampled
    pair satisfies it.
    """
    _, values, d, q = _sampled_pairs(op, region, samples, seed)
    premise = np.einsum("ij,ij->i", values[1:], d) >= 0.0
    valid = premise & (q > 0.0)
    if not np.any(valid):
        return math.inf
    quotients = np.einsum("ij,ij->i", values[:-1], d)[valid] / q[valid]
    return float(np.min(quotients))


def estimate_lipschitz(op: Operator, region: ConvexSet, samples: int, seed: int) -> float:
    """Max over sampled pairs of ||F(x)-F(y)|| / ||x-y|| (a lower estimate).

    For families with ``lipschitz_is_finite`` False the estimate keeps growing
    with the sample count; the returned value is still finite for any finite
    sample.
    """
    _, values, d, q = _sampled_pairs(op, region, samples, seed)
    valid = q > 0.0
    if not np.any(valid):
        return 0.0
    value_gaps = np.linalg.norm(values[:-1] - values[1:], axis=1)[valid]
    return float(np.max(value_gaps / np.sqrt(q[valid])))


def value_bound(op: Operator, region: ConvexSet, samples: int, seed: int) -> float:
    """Max of ||F(x)|| over sampled points, plus box corners when cheap."""
    if samples < 1:
        raise ValueError("need at least one sample point")
    rng = np.random.default_rng(seed)
    batches = [_sample_points(region, samples, rng)]
    if isinstance(region, Box) and region.dim <= 16:
        corners = np.stack(
            np.meshgrid(*zip(region.lower, region.upper), indexing="ij"), axis=-1
        ).reshape(-1, region.dim)
        batches.append(corners)
    best = 0.0
    for batch in batches:
        best = max(best, float(np.max(np.linalg.norm(op.evaluate_many(batch), axis=1))))
    return best
