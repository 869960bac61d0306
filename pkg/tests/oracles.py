"""Independent projection oracles used to cross-check the library.

These deliberately avoid the library's own projection code paths: the
box-and-ball projector solves the KKT system by bisection on the ball
multiplier, and the grid projector minimizes the distance over a dense
feasible grid.
"""

import numpy as np


def project_box_ball_kkt(lower, upper, center, radius, x, iters=200):
    """Exact projection onto {lower <= z <= upper, ||z - center|| <= radius}.

    For a fixed ball multiplier theta >= 0 the box-constrained minimizer is
    clip((x + theta*center) / (1 + theta)); the ball residual is decreasing in
    theta, so the complementary multiplier is found by bisection.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    center = np.asarray(center, dtype=float)
    x = np.asarray(x, dtype=float)

    def candidate(theta):
        return np.clip((x + theta * center) / (1.0 + theta), lower, upper)

    def ball_excess(theta):
        return float(np.linalg.norm(candidate(theta) - center)) - radius

    if ball_excess(0.0) <= 0.0:
        return candidate(0.0)
    hi = 1.0
    while ball_excess(hi) > 0.0:
        hi *= 2.0
        if hi > 1e18:
            raise ValueError("no feasible point: the box and ball do not intersect")
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ball_excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return candidate(hi)


def project_grid_box_ball(lower, upper, center, radius, x, step):
    """Distance-minimizing feasible point of a dense grid over the box."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    center = np.asarray(center, dtype=float)
    x = np.asarray(x, dtype=float)
    axes = [np.arange(lower[i], upper[i] + step * 0.5, step) for i in range(lower.size)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    feasible = points[np.linalg.norm(points - center, axis=1) <= radius + 1e-12]
    if feasible.size == 0:
        raise ValueError("no feasible grid point")
    return feasible[np.argmin(np.linalg.norm(feasible - x, axis=1))]
