"""Small numerical helpers: quadrature grids and finite differences."""

from typing import Callable, Tuple

import numpy as np

from .constants import FINITE_DIFFERENCE_STEP


def as_points(x, dim: int) -> np.ndarray:
    """Coerce a point or an array of points to shape ``(n, dim)``."""
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(1, -1) if pts.shape[0] == dim else pts.reshape(-1, 1)
    if pts.shape[-1] != dim:
        raise ValueError(f"Points have dimension {pts.shape[-1]}, expected {dim}")
    return pts


def midpoint_grid(
    lower: np.ndarray, upper: np.ndarray, points_per_unit: float
) -> Tuple[np.ndarray, float, Tuple[int, ...]]:
    """Midpoint rule nodes on a box.

    Args:
        lower: Lower corner, shape (d,)
        upper: Upper corner, shape (d,)
        points_per_unit: Node density per unit length along every axis

    Returns:
        Tuple of (nodes of shape (n, d), cell volume, per-axis node counts)
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    counts = tuple(int(max(1, np.ceil((u - l) * points_per_unit))) for l, u in zip(lower, upper))
    axes = [
        l + (np.arange(n) + 0.5) * (u - l) / n for l, u, n in zip(lower, upper, counts)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    cell = float(np.prod((upper - lower) / np.asarray(counts)))
    return nodes, cell, counts


def central_gradient(
    func: Callable[[np.ndarray], np.ndarray], points: np.ndarray, h: float = FINITE_DIFFERENCE_STEP
) -> np.ndarray:
    """Central finite-difference gradient of a vectorized scalar function.

    Args:
        func: Maps (n, d) points to (n,) values
        points: Evaluation points, shape (n, d)
        h: Step size

    Returns:
        Array of shape (n, d)
    """
    points = np.asarray(points, dtype=float)
    grad = np.empty_like(points)
    for j in range(points.shape[1]):
        step = np.zeros(points.shape[1])
        step[j] = h
        grad[:, j] = (func(points + step) - func(points - step)) / (2.0 * h)
    return grad


def central_partial(
    func: Callable[[np.ndarray], np.ndarray],
    points: np.ndarray,
    axis: int,
    order: int,
    h: float = 1e-3,
) -> np.ndarray:
    """Central finite-difference partial derivative of order 1-4 along one axis."""
    stencils = {
        1: ([-1, 1], [-0.5, 0.5]),
        2: ([-1, 0, 1], [1.0, -2.0, 1.0]),
        3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5]),
        4: ([-2, -1, 0, 1, 2], [1.0, -4.0, 6.0, -4.0, 1.0]),
    }
    if order not in stencils:
        raise ValueError(f"Derivative order must be 1-4, got {order}")
    offsets, weights = stencils[order]
    points = np.asarray(points, dtype=float)
    total = np.zeros(points.shape[0])
    for k, w in zip(offsets, weights):
        shifted = points.copy()
        shifted[:, axis] += k * h
        total += w * func(shifted)
    return total / h**order
