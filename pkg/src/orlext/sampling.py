"""Seeded sampling helpers for condition checks and geometry scans.

All randomness in the package flows through a single numpy Generator so
that reports are reproducible from a recorded seed.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .grid import RasterDomain


def default_rng(seed=0) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_inside_points(domain: RasterDomain, count: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Random inside cell centers, shape (count, 2)."""
    pts = domain.inside_points
    if pts.shape[0] == 0:
        raise InputError("domain has no inside cells")
    idx = rng.integers(0, pts.shape[0], size=count)
    return pts[idx]


def sample_pairs(domain: RasterDomain, count: int, rng: np.random.Generator,
                 max_dist: float | None = None) -> np.ndarray:
    """Random pairs of inside cell centers, shape (count, 2, 2).

    With ``max_dist`` the second point is drawn from cells within that
    distance of the first (pairs with no neighbor are re-drawn).
    """
    pts = domain.inside_points
    if max_dist is None:
        a = rng.integers(0, pts.shape[0], size=count)
        b = rng.integers(0, pts.shape[0], size=count)
        return np.stack([pts[a], pts[b]], axis=1)
    tree = domain.inside_kdtree
    out = np.empty((count, 2, 2))
    filled = 0
    attempts = 0
    while filled < count:
        attempts += 1
        if attempts > 50 * count + 100:
            raise InputError("could not sample enough pairs within max_dist")
        i = int(rng.integers(0, pts.shape[0]))
        neighbors = tree.query_ball_point(pts[i], max_dist)
        if len(neighbors) < 2:
            continue
        j = int(neighbors[int(rng.integers(0, len(neighbors)))])
        if j == i:
            continue
        out[filled, 0] = pts[i]
        out[filled, 1] = pts[j]
        filled += 1
    return out


def sample_balls(domain: RasterDomain, count: int, rng: np.random.Generator,
                 r_min: float | None = None, r_max: float | None = None,
                 max_points: int = 64):
    """Random balls intersecting the domain: centers at inside cells, radii
    log-uniform in [r_min, r_max].  Returns a list of (radius, points)
    where points are the inside cell centers falling in the ball (capped
    at ``max_points`` by subsampling)."""
    pts = domain.inside_points
    tree = domain.inside_kdtree
    if r_min is None:
        r_min = domain.h
    if r_max is None:
        r_max = 1.0 / np.sqrt(np.pi)  # |B| = 1 in the plane
    if not (0 < r_min <= r_max):
        raise InputError("need 0 < r_min <= r_max")
    balls = []
    radii = np.exp(rng.uniform(np.log(r_min), np.log(r_max), size=count))
    centers = pts[rng.integers(0, pts.shape[0], size=count)]
    for r, c in zip(radii, centers):
        idx = tree.query_ball_point(c, r)
        if len(idx) < 2:
            continue
        if len(idx) > max_points:
            idx = rng.choice(idx, size=max_points, replace=False)
        balls.append((float(r), pts[np.asarray(idx, dtype=int)]))
    return balls
