"""Convex domains: membership, metric projection, boundary normals.

Two shapes are supported, axis-aligned hyperrectangles and Euclidean balls.
Every method accepts a single point of shape (d,) or a batch of shape (n, d).
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.special import gamma

from ..utils.constants import BOUNDARY_TOLERANCE
from ..utils.errors import DomainError


class Shape(str, Enum):
    """Supported convex domain shapes."""

    HYPERRECTANGLE = "hyperrectangle"
    BALL = "ball"


@dataclass(frozen=True)
class DomainSpec:
    """A bounded convex domain O in R^d.

    Attributes:
        shape: Domain shape
        lower: Per-axis lower bounds (hyperrectangle only)
        upper: Per-axis upper bounds (hyperrectangle only)
        center: Ball center (ball only)
        radius: Ball radius (ball only)
        normalized: Whether the domain was rescaled to unit volume
    """

    shape: Shape
    lower: Optional[Tuple[float, ...]] = None
    upper: Optional[Tuple[float, ...]] = None
    center: Optional[Tuple[float, ...]] = None
    radius: Optional[float] = None
    normalized: bool = False

    def __post_init__(self):
        """Validate parameters and freeze sequences into tuples."""
        object.__setattr__(self, "shape", Shape(self.shape))
        if self.shape is Shape.HYPERRECTANGLE:
            if self.lower is None or self.upper is None:
                raise DomainError("Hyperrectangle needs lower and upper bounds")
            lower = tuple(float(v) for v in np.atleast_1d(self.lower))
            upper = tuple(float(v) for v in np.atleast_1d(self.upper))
            if len(lower) != len(upper) or not lower:
                raise DomainError(f"Bound lengths differ: {len(lower)} vs {len(upper)}")
            if any(u <= l for l, u in zip(lower, upper)):
                raise DomainError(f"Empty hyperrectangle: lower={lower}, upper={upper}")
            object.__setattr__(self, "lower", lower)
            object.__setattr__(self, "upper", upper)
        else:
            if self.center is None or self.radius is None:
                raise DomainError("Ball needs center and radius")
            center = tuple(float(v) for v in np.atleast_1d(self.center))
            if float(self.radius) <= 0:
                raise DomainError(f"Ball radius must be positive: {self.radius}")
            object.__setattr__(self, "center", center)
            object.__setattr__(self, "radius", float(self.radius))
        if self.normalized and abs(self.volume - 1.0) > 1e-12:
            raise DomainError(f"Normalized domain has volume {self.volume}, expected 1")

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------
    @classmethod
    def hyperrectangle(cls, lower, upper) -> "DomainSpec":
        return cls(shape=Shape.HYPERRECTANGLE, lower=tuple(lower), upper=tuple(upper))

    @classmethod
    def ball(cls, center, radius: float) -> "DomainSpec":
        return cls(shape=Shape.BALL, center=tuple(center), radius=radius)

    @classmethod
    def unit_cube(cls, dim: int) -> "DomainSpec":
        return cls(
            shape=Shape.HYPERRECTANGLE,
            lower=(0.0,) * dim,
            upper=(1.0,) * dim,
            normalized=True,
        )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DomainSpec":
        """Build a domain from its config/sidecar representation.

        Raises:
            DomainError: If keys are missing or values invalid
        """
        try:
            shape = Shape(data["shape"])
        except (KeyError, ValueError) as e:
            raise DomainError(f"Invalid domain shape in {data}") from e
        if shape is Shape.HYPERRECTANGLE:
            domain = cls.hyperrectangle(data.get("lower", ()), data.get("upper", ()))
        else:
            domain = cls.ball(data.get("center", ()), data.get("radius", 0.0))
        if data.get("normalized", False):
            domain = domain.normalized_copy()
        return domain

    def to_dict(self) -> Dict[str, Any]:
        if self.shape is Shape.HYPERRECTANGLE:
            data = {"shape": self.shape.value, "lower": list(self.lower), "upper": list(self.upper)}
        else:
            data = {"shape": self.shape.value, "center": list(self.center), "radius": self.radius}
        data["normalized"] = self.normalized
        return data

    # ------------------------------------------------------------------
    # Basic properties
    # ------------------------------------------------------------------
    @property
    def dim(self) -> int:
        if self.shape is Shape.HYPERRECTANGLE:
            return len(self.lower)
        return len(self.center)

    @property
    def volume(self) -> float:
        if self.shape is Shape.HYPERRECTANGLE:
            return float(np.prod(np.subtract(self.upper, self.lower)))
        d = self.dim
        return float(np.pi ** (d / 2) / gamma(d / 2 + 1) * self.radius**d)

    @property
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.shape is Shape.HYPERRECTANGLE:
            return np.asarray(self.lower), np.asarray(self.upper)
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    @property
    def centroid(self) -> np.ndarray:
        if self.shape is Shape.HYPERRECTANGLE:
            return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0
        return np.asarray(self.center)

    @property
    def min_width(self) -> float:
        """Smallest extent of the domain along any axis."""
        if self.shape is Shape.HYPERRECTANGLE:
            return float(np.min(np.subtract(self.upper, self.lower)))
        return 2.0 * self.radius

    def normalized_copy(self) -> "DomainSpec":
        """Rescale about the centroid so that the volume equals 1."""
        factor = self.volume ** (-1.0 / self.dim)
        c = self.centroid
        if self.shape is Shape.HYPERRECTANGLE:
            half = (np.asarray(self.upper) - np.asarray(self.lower)) / 2.0 * factor
            return DomainSpec(
                shape=self.shape,
                lower=tuple(c - half),
                upper=tuple(c + half),
                normalized=True,
            )
        return replace(self, radius=self.radius * factor, normalized=True)

    # ------------------------------------------------------------------
    # Geometry
    # ------------------------------------------------------------------
    def _points(self, x) -> Tuple[np.ndarray, bool]:
        pts = np.asarray(x, dtype=float)
        single = pts.ndim == 1
        if pts.ndim == 0 and self.dim == 1:
            pts, single = pts.reshape(1), True
        pts = np.atleast_2d(pts)
        if pts.shape[-1] != self.dim:
            raise DomainError(f"Point dimension {pts.shape[-1]} does not match domain dimension {self.dim}")
        return pts, single

    def signed_distance(self, x) -> np.ndarray:
        """Distance to the boundary, positive inside and negative outside.

        For hyperrectangles the outside value is the negated distance to the
        nearest face plane, which is exact along axis directions.
        """
        pts, single = self._points(x)
        if self.shape is Shape.HYPERRECTANGLE:
            lo = pts - np.asarray(self.lower)
            hi = np.asarray(self.upper) - pts
            dist = np.minimum(lo, hi).min(axis=1)
        else:
            dist = self.radius - np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return dist[0] if single else dist

    def contains(self, x, tol: float = 0.0):
        """Membership in the closure of O."""
        pts, single = self._points(x)
        if self.shape is Shape.HYPERRECTANGLE:
            inside = np.all(
                (pts >= np.asarray(self.lower) - tol) & (pts <= np.asarray(self.upper) + tol), axis=1
            )
        else:
            inside = np.linalg.norm(pts - np.asarray(self.center), axis=1) <= self.radius + tol
        return bool(inside[0]) if single else inside

    def project(self, x) -> np.ndarray:
        """Metric projection onto the closure of O."""
        pts, single = self._points(x)
        if self.shape is Shape.HYPERRECTANGLE:
            out = np.clip(pts, np.asarray(self.lower), np.asarray(self.upper))
        else:
            c = np.asarray(self.center)
            offset = pts - c
            norm = np.linalg.norm(offset, axis=1, keepdims=True)
            scale = np.where(norm > self.radius, self.radius / np.maximum(norm, 1e-300), 1.0)
            out = c + offset * scale
        return out[0] if single else out

    def inward_normal(self, x, tol: float = BOUNDARY_TOLERANCE) -> np.ndarray:
        """Unit inward normal at a boundary point.

        At hyperrectangle corners and edges the normalized sum of the active
        face normals is returned.

        Raises:
            DomainError: If the point is farther than ``tol`` from the boundary
        """
        pts, single = self._points(x)
        normals = np.empty_like(pts)
        for i, p in enumerate(pts):
            if abs(self.signed_distance(p)) > tol:
                raise DomainError(f"Point {p} is not on the boundary (tolerance {tol})")
            if self.shape is Shape.HYPERRECTANGLE:
                n = np.zeros(self.dim)
                n[np.abs(p - np.asarray(self.lower)) <= tol] += 1.0
                n[np.abs(np.asarray(self.upper) - p) <= tol] -= 1.0
            else:
                n = np.asarray(self.center) - p
            normals[i] = n / np.linalg.norm(n)
        return normals[0] if single else normals

    def sample_uniform(self, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, int]:
        """Uniform points in O by rejection from the bounding box.

        Returns:
            Tuple of (points of shape (n, d), number of proposals drawn)
        """
        lo, hi = self.bounding_box
        if self.shape is Shape.HYPERRECTANGLE:
            return lo + (hi - lo) * rng.random((n, self.dim)), n
        accepted = []
        proposed = 0
        remaining = n
        while remaining > 0:
            batch = max(16, int(remaining * 1.5 * np.prod(hi - lo) / self.volume))
            cand = lo + (hi - lo) * rng.random((batch, self.dim))
            mask = self.contains(cand)
            keep = cand[mask]
            if len(keep) >= remaining:
                # proposals up to the last accepted one
                used = np.flatnonzero(mask)[remaining - 1] + 1
                proposed += int(used)
                accepted.append(keep[:remaining])
                remaining = 0
            else:
                proposed += batch
                accepted.append(keep)
                remaining -= len(keep)
        return np.concatenate(accepted, axis=0), proposed

    def sample_boundary(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Points on the boundary, uniform with respect to surface measure."""
        if self.shape is Shape.BALL:
            directions = rng.standard_normal((n, self.dim))
            directions /= np.linalg.norm(directions, axis=1, keepdims=True)
            return np.asarray(self.center) + self.radius * directions
        lo, hi = self.bounding_box
        widths = hi - lo
        if self.dim == 1:
            return np.where(rng.random((n, 1)) < 0.5, lo, hi)
        face_area = np.array([np.prod(np.delete(widths, j)) for j in range(self.dim)])
        axes = rng.choice(self.dim, size=n, p=face_area / face_area.sum())
        points = lo + widths * rng.random((n, self.dim))
        upper_side = rng.random(n) < 0.5
        points[np.arange(n), axes] = np.where(upper_side, hi[axes], lo[axes])
        return points

    def inset(self, distance: float) -> "DomainSpec":
        """Uniform inset (positive distance) or outset (negative distance).

        Raises:
            DomainError: If the inset leaves an empty region
        """
        if self.shape is Shape.HYPERRECTANGLE:
            lower = np.asarray(self.lower) + distance
            upper = np.asarray(self.upper) - distance
            if np.any(upper <= lower):
                raise DomainError(
                    f"Inset {distance} empties a domain of minimal width {self.min_width}"
                )
            return DomainSpec.hyperrectangle(lower, upper)
        if self.radius - distance <= 0:
            raise DomainError(f"Inset {distance} empties a ball of radius {self.radius}")
        return DomainSpec.ball(self.center, self.radius - distance)


def contains(domain: DomainSpec, x) -> bool:
    """True iff x lies in the closure of the domain.

    Raises:
        DomainError: On dimension mismatch
    """
    return domain.contains(x)


def project_to_domain(domain: DomainSpec, x) -> np.ndarray:
    """Metric projection of x onto the closure of the domain (identity inside)."""
    return domain.project(x)


def inward_normal(domain: DomainSpec, x) -> np.ndarray:
    """Unit inward normal at boundary point x.

    Raises:
        DomainError: If x is not within tolerance of the boundary
    """
    return domain.inward_normal(x)
