"""Sample grids in space-time. Coordinate 0 is time, 1..n are space."""
from __future__ import annotations

import numpy as np


def box_grid(lo, hi, counts):
    """Tensor grid over the closed box [lo, hi] with ``counts`` nodes per axis.

    Returns ``(t, x)`` with shapes (m,) and (m, n), time varying slowest.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    counts = np.broadcast_to(np.asarray(counts, dtype=int), lo.shape)
    axes = [np.linspace(a, b, c) if c > 1 else np.array([0.5 * (a + b)])
            for a, b, c in zip(lo, hi, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    return pts[:, 0].copy(), pts[:, 1:].copy()


def ball_grid(center, radius, count):
    """Points of a ``count``-per-axis tensor grid lying in the closed ball."""
    center = np.asarray(center, dtype=float)
    t, x = box_grid(center - radius, center + radius, count)
    pts = np.column_stack([t, x])
    keep = np.linalg.norm(pts - center, axis=1) <= radius * (1 + 1e-12)
    return t[keep], x[keep]


def stack_points(t, x) -> np.ndarray:
    return np.column_stack([np.asarray(t, dtype=float).reshape(-1),
                            np.asarray(x, dtype=float).reshape(np.size(t), -1)])


def split_points(points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return points[:, 0].copy(), points[:, 1:].copy()
