"""The smooth cutoff χ with χ = 1 on K and χ = 0 outside O_0.

χ composes the degree-7 smooth step S(t) = 35t⁴ − 84t⁵ + 70t⁶ − 20t⁷
(three continuous derivatives, flat to third order at 0 and 1) with the
inset distance. For hyperrectangles the step is applied per axis and the
factors multiplied.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from .domain import Shape
from .regions import NestedRegions

_STEP = Polynomial([0, 0, 0, 0, 35, -84, 70, -20])
_GRID = np.linspace(0.0, 1.0, 20001)
STEP_MAX_SLOPE = float(np.max(np.abs(_STEP.deriv(1)(_GRID))))
STEP_MAX_CURVATURE = float(np.max(np.abs(_STEP.deriv(2)(_GRID))))


def smooth_step(t: np.ndarray) -> np.ndarray:
    """S(clamp(t, 0, 1))."""
    return _STEP(np.clip(t, 0.0, 1.0))


@dataclass(frozen=True)
class CutoffField:
    """Smooth cutoff attached to a set of nested regions.

    Attributes:
        regions: Regions providing K, O_0 and δ
        width: Transition width (the separation δ between K and ∂O_0)
        lipschitz_bound: Stored bound on |∇χ|
        second_derivative_bound: Stored bound on every second partial of χ
    """

    regions: NestedRegions
    width: float = field(init=False)
    lipschitz_bound: float = field(init=False)
    second_derivative_bound: float = field(init=False)

    def __post_init__(self):
        delta = self.regions.delta
        d = self.regions.domain.dim
        object.__setattr__(self, "width", delta)
        if self.regions.domain.shape is Shape.HYPERRECTANGLE:
            lipschitz = np.sqrt(d) * STEP_MAX_SLOPE / delta
        else:
            lipschitz = STEP_MAX_SLOPE / delta
        object.__setattr__(self, "lipschitz_bound", float(lipschitz))
        object.__setattr__(
            self,
            "second_derivative_bound",
            float(max(STEP_MAX_SLOPE**2, STEP_MAX_CURVATURE) / delta**2),
        )

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)

    def evaluate(self, points) -> np.ndarray:
        """χ at points of shape (n, d); returns shape (n,)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        O_0 = self.regions.O_0
        if O_0.shape is Shape.HYPERRECTANGLE:
            lo = pts - np.asarray(O_0.lower)
            hi = np.asarray(O_0.upper) - pts
            t = np.minimum(lo, hi) / self.width
            return np.prod(smooth_step(t), axis=1)
        t = (O_0.radius - np.linalg.norm(pts - np.asarray(O_0.center), axis=1)) / self.width
        return smooth_step(t)


def cutoff(field: CutoffField, x) -> np.ndarray:
    """Evaluate the cutoff; exactly 1 on K and exactly 0 outside O_0."""
    return field.evaluate(x)
