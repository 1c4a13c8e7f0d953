"""Composite Simpson quadrature on uniform grids.

Everything here works on sampled values so that callers can batch the
(usually expensive) integrand evaluation and reuse the coarse subset of an
odd grid for Richardson-style error estimates.
"""

from __future__ import annotations

import numpy as np


def normalize_node_count(n: int, minimum: int = 9) -> int:
    """Smallest node count >= max(n, minimum) of the form 4m+1.

    4m+1 nodes give an even number of Simpson subintervals whose half
    resolution (every other node) is again a valid odd Simpson grid.
    """
    n = max(int(n), int(minimum))
    while n % 4 != 1:
        n += 1
    return n


def simpson_uniform(y: np.ndarray, dx: float, axis: int = -1) -> np.ndarray:
    """Composite Simpson integral of uniformly sampled values.

    ``y`` must have an odd number (>= 3) of samples along ``axis``.
    """
    y = np.asarray(y)
    n = y.shape[axis]
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson rule needs an odd number >= 3 of samples, got {n}")
    yv = np.moveaxis(y, axis, -1)
    s = yv[..., 0] + yv[..., -1] + 4.0 * yv[..., 1:-1:2].sum(axis=-1) \
        + 2.0 * yv[..., 2:-2:2].sum(axis=-1)
    return s * (dx / 3.0)


def simpson_with_estimate(y: np.ndarray, a: float, b: float,
                          axis: int = -1) -> tuple[np.ndarray, np.ndarray]:
    """Simpson integral over [a, b] plus a Richardson-style error estimate.

    The estimate compares the full grid against its half resolution
    (every other node), scaled by 1/15 for the fourth-order rule, so
    doubling the node count should change the result by less than it.
    Requires a 4m+1 node grid (see ``normalize_node_count``).
    """
    y = np.asarray(y)
    n = y.shape[axis]
    if n % 4 != 1:
        raise ValueError(f"error estimate needs a 4m+1 node grid, got {n} nodes")
    dx = (b - a) / (n - 1)
    full = simpson_uniform(y, dx, axis=axis)
    half = simpson_uniform(np.moveaxis(y, axis, -1)[..., ::2], 2.0 * dx, axis=-1)
    return full, np.abs(full - half) / 15.0
