"""Closed convex sets in R^n with Euclidean projections.

Every set variant knows its dimension, can project an arbitrary point, and
can report its worst constraint violation at a point.  Box, ball, halfspace,
simplex and full-space projections are exact closed forms; intersections are
projected with Dykstra's alternating scheme.

Set objects are immutable after construction and projection is a pure
function, so instances can be shared freely across threads.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

# Dykstra stopping rule: displacement of the iterate over one full cycle.
# The tolerance sits well below the solver stopping tolerances so projection
# error never dominates a convergence check.
DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_CYCLES = 10_000


class DimensionMismatchError(ValueError):
    """A vector's dimension does not match the set it is used with."""


class DykstraConvergenceError(RuntimeError):
    """Dykstra's iteration did not stabilize; the intersection is likely empty."""


class UnboundedSetError(ValueError):
    """A bounded set was required but the given one is unbounded."""


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float array, optionally checking its length."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got array of shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite coordinates")
    if dim is not None and v.size != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {v.size}")
    return v


def _values_equal(a, b) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(_values_equal(u, v) for u, v in zip(a, b))
    return bool(a == b)


def fields_equal(a, b) -> bool:
    """Structural equality for dataclasses holding numpy arrays."""
    if type(a) is not type(b):
        return False
    return all(
        _values_equal(getattr(a, f.name), getattr(b, f.name))
        for f in dataclasses.fields(a)
    )


class ConvexSet:
    """Common interface of all set variants."""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def project(self, x) -> np.ndarray:
        """Euclidean projection of ``x`` onto the set."""
        raise NotImplementedError

    def violation(self, x) -> float:
        """Largest amount by which ``x`` violates a defining constraint.

        Zero inside the set.  Used for tolerance-based membership tests.
        """
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> bool:
        """True iff every defining constraint is violated by at most ``tol``."""
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        return self.violation(x) <= tol

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Componentwise (lower, upper) bounds enclosing the set (may be infinite)."""
        raise NotImplementedError

    @property
    def is_bounded(self) -> bool:
        lo, hi = self.bounding_box()
        return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))

    def __eq__(self, other):
        if not isinstance(other, ConvexSet):
            return NotImplemented
        return fields_equal(self, other)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    """Axis-aligned box ``lower <= x <= upper``; infinite bounds are allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("box bounds must be 1-D arrays of equal length")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError("box bounds may not be NaN")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper in every coordinate")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    def project(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        return np.clip(x, self.lower, self.upper)

    def violation(self, x) -> float:
        x = as_vector(x, self.dim)
        below = self.lower - x
        above = x - self.upper
        return float(max(0.0, np.max(below), np.max(above)))

    def bounding_box(self):
        return self.lower.copy(), self.upper.copy()


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Closed Euclidean ball of positive radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = as_vector(self.center)
        radius = float(self.radius)
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @property
    def dim(self) -> int:
        return self.center.size

    def project(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        d = x - self.center
        dist = float(np.linalg.norm(d))
        if dist <= self.radius:
            return x.copy()
        return self.center + d * (self.radius / dist)

    def violation(self, x) -> float:
        x = as_vector(x, self.dim)
        return float(max(0.0, np.linalg.norm(x - self.center) - self.radius))

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """Halfspace ``<normal, x> <= offset`` with a nonzero normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = as_vector(self.normal)
        if not np.any(normal != 0.0):
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size

    def project(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        slack = float(self.normal @ x) - self.offset
        if slack <= 0.0:
            return x.copy()
        return x - self.normal * (slack / float(self.normal @ self.normal))

    def violation(self, x) -> float:
        x = as_vector(x, self.dim)
        return float(max(0.0, float(self.normal @ x) - self.offset))

    def bounding_box(self):
        inf = np.full(self.dim, np.inf)
        return -inf, inf.copy()


@dataclass(frozen=True, eq=False)
class Simplex(ConvexSet):
    """Probability simplex ``x >= 0, sum(x) = 1`` in dimension ``n``."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("simplex dimension must be >= 1")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dim(self) -> int:
        return self.n

    def project(self, x) -> np.ndarray:
        # Sort-and-threshold method, O(n log n) and exact.
        x = as_vector(x, self.dim)
        u = np.sort(x)[::-1]
        cumsum = np.cumsum(u)
        js = np.arange(1, self.n + 1)
        rho = int(np.nonzero(u * js > cumsum - 1.0)[0][-1])
        theta = (cumsum[rho] - 1.0) / (rho + 1.0)
        return np.maximum(x - theta, 0.0)

    def violation(self, x) -> float:
        x = as_vector(x, self.dim)
        return float(max(0.0, np.max(-x), abs(float(np.sum(x)) - 1.0)))

    def bounding_box(self):
        return np.zeros(self.n), np.ones(self.n)


@dataclass(frozen=True, eq=False)
class FullSpace(ConvexSet):
    """All of R^n."""

    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("dimension must be >= 1")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dim(self) -> int:
        return self.n

    def project(self, x) -> np.ndarray:
        return as_vector(x, self.dim).copy()

    def violation(self, x) -> float:
        as_vector(x, self.dim)
        return 0.0

    def bounding_box(self):
        inf = np.full(self.n, np.inf)
        return -inf, inf.copy()


@dataclass(frozen=True, eq=False)
class Intersection(ConvexSet):
    """Intersection of two or more sets of equal dimension.

    Nonemptiness is the caller's responsibility; it cannot be decided
    statically for this representation.  An empty intersection surfaces as
    :class:`DykstraConvergenceError` at projection time.
    """

    members: tuple[ConvexSet, ...]

    def __post_init__(self):
        flat: list[ConvexSet] = []
        for member in self.members:
            if isinstance(member, Intersection):
                flat.extend(member.members)
            else:
                flat.append(member)
        if len(flat) < 2:
            raise ValueError("intersection needs at least two member sets")
        dims = {m.dim for m in flat}
        if len(dims) != 1:
            raise DimensionMismatchError(f"members have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "members", tuple(flat))

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def project(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        current = x.copy()
        corrections = [np.zeros_like(x) for _ in self.members]
        for _ in range(DYKSTRA_MAX_CYCLES):
            previous = current
            previous_corrections = [c for c in corrections]
            for i, member in enumerate(self.members):
                shifted = current + corrections[i]
                projected = member.project(shifted)
                corrections[i] = shifted - projected
                current = projected
            # The iterate can coincidentally repeat while the corrections are
            # still moving (and on disjoint members it stabilizes outside the
            # set), so convergence requires the whole state to settle plus
            # feasibility; emptiness then surfaces as non-convergence below.
            displacement = float(np.linalg.norm(current - previous)) + sum(
                float(np.linalg.norm(c - p))
                for c, p in zip(corrections, previous_corrections)
            )
            if displacement <= DYKSTRA_TOL and self.violation(current) <= 1e-9:
                return current
        raise DykstraConvergenceError(
            f"no convergence within {DYKSTRA_MAX_CYCLES} cycles; "
            "the intersection may be empty"
        )

    def violation(self, x) -> float:
        return max(member.violation(x) for member in self.members)

    def bounding_box(self):
        los, his = zip(*(m.bounding_box() for m in self.members))
        return np.max(np.stack(los), axis=0), np.min(np.stack(his), axis=0)


def intersect_with_ball(base: ConvexSet, center, radius: float) -> ConvexSet:
    """Restrict ``base`` to a closed ball, flattening nested intersections.

    Restricting the full space is just the ball itself.
    """
    center = as_vector(center, base.dim)
    ball = Ball(center, radius)
    if isinstance(base, FullSpace):
        return ball
    if isinstance(base, Intersection):
        return Intersection(base.members + (ball,))
    return Intersection((base, ball))
