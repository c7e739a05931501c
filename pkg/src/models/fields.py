"""Scalar and diffusivity fields.

Contract (ScalarField):
    - ``evaluate`` takes points of shape (n, d) and returns shape (n,).
    - ``gradient`` and ``partial`` default to central finite differences;
      analytic fields override them.
    - Fields are immutable and safe to share between workers.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import RegularGridInterpolator

from ..utils.constants import FINITE_DIFFERENCE_STEP
from ..utils.numerics import as_points, central_gradient, central_partial


class ScalarField(ABC):
    """Real function on R^d evaluated in batches."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Spatial dimension d."""
        pass

    @abstractmethod
    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at points of shape (n, d)."""
        pass

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(as_points(x, self.dim))

    def gradient(self, points) -> np.ndarray:
        """∇ at points, shape (n, d)."""
        return central_gradient(self.evaluate, as_points(points, self.dim), FINITE_DIFFERENCE_STEP)

    def partial(self, points, axis: int, order: int) -> np.ndarray:
        """∂^order/∂x_axis^order at points (orders 1-4)."""
        return central_partial(self.evaluate, as_points(points, self.dim), axis, order)


class DiffusivityField(ScalarField):
    """A diffusivity f with the metadata needed by the estimators.

    Attributes exposed by subclasses:
        f_min: Known positive lower bound, or None for estimated fields
        sup_bound: Known upper bound of f on O, or None
        holder_bound: Callable s -> bound on ‖f‖_{C^s}, when analytic
    """

    f_min: Optional[float] = None

    @property
    def sup_bound(self) -> Optional[float]:
        return None

    def holder_bound(self, s: float) -> Optional[float]:
        return None

    def describe(self) -> Dict[str, Any]:
        """Provenance tag written into sidecars and manifests."""
        return {"type": type(self).__name__}


@dataclass(frozen=True)
class ConstantField(DiffusivityField):
    """f ≡ value."""

    value: float
    dimension: int
    f_min: Optional[float] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"Dimension must be positive: {self.dimension}")
        if self.f_min is None:
            object.__setattr__(self, "f_min", float(self.value) if self.value > 0 else None)

    @property
    def dim(self) -> int:
        return self.dimension

    def evaluate(self, points):
        return np.full(np.atleast_2d(points).shape[0], float(self.value))

    def gradient(self, points):
        return np.zeros_like(as_points(points, self.dim))

    def partial(self, points, axis, order):
        return np.zeros(as_points(points, self.dim).shape[0])

    @property
    def sup_bound(self):
        return float(self.value)

    def holder_bound(self, s):
        return abs(float(self.value))

    def describe(self):
        return {"type": "constant", "value": float(self.value), "dim": self.dimension}


def _bump_derivative_polynomials(max_order: int):
    """P_k with b^(k)(t) = P_k(t) (1 − t²)^(−2k) b(t) for b(t) = exp(1 − 1/(1 − t²))."""
    one_minus = Polynomial([1.0, 0.0, -1.0])
    t = Polynomial([0.0, 1.0])
    polys = [Polynomial([1.0])]
    for k in range(max_order):
        p = polys[-1]
        polys.append(p.deriv() * one_minus**2 + 4 * k * t * p * one_minus - 2 * t * p)
    return polys


_BUMP_POLYS = _bump_derivative_polynomials(10)
_T = np.linspace(-1 + 1e-9, 1 - 1e-9, 40001)


def bump_profile(t: np.ndarray, order: int = 0) -> np.ndarray:
    """k-th derivative of the C^∞ bump b(t) = exp(1 − 1/(1 − t²)), b(0) = 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    w = 1.0 - ti**2
    base = np.exp(1.0 - 1.0 / w)
    out[inside] = _BUMP_POLYS[order](ti) * w ** (-2 * order) * base
    return out


_BUMP_SUPS = [float(np.max(np.abs(bump_profile(_T, k)))) for k in range(len(_BUMP_POLYS))]


def _multi_indices(dim: int, total: int):
    if dim == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _multi_indices(dim - 1, total - first):
            yield (first,) + rest


@dataclass(frozen=True)
class BumpField(DiffusivityField):
    """f(x) = base + amplitude · Π_j b((x_j − c_j)/ρ_j).

    Attributes:
        center: Bump center
        widths: Per-axis half-widths ρ_j
        amplitude: Peak height above the base
        base: Value outside the support (1 for members of F_0)
        f_min: Lower bound recorded for the link and parameter checks
    """

    center: Tuple[float, ...]
    widths: Tuple[float, ...]
    amplitude: float
    base: float = 1.0
    f_min: Optional[float] = None

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        widths = tuple(float(w) for w in np.broadcast_to(np.atleast_1d(self.widths), (len(center),)))
        if any(w <= 0 for w in widths):
            raise ValueError(f"Bump widths must be positive: {widths}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "widths", widths)
        if self.f_min is None:
            object.__setattr__(self, "f_min", self.base + min(0.0, self.amplitude))

    @property
    def dim(self) -> int:
        return len(self.center)

    def _scaled(self, points):
        return (np.atleast_2d(points) - np.asarray(self.center)) / np.asarray(self.widths)

    def evaluate(self, points):
        t = self._scaled(points)
        return self.base + self.amplitude * np.prod(bump_profile(t), axis=1)

    def gradient(self, points):
        t = self._scaled(as_points(points, self.dim))
        values = bump_profile(t)
        derivs = bump_profile(t, 1)
        grad = np.empty_like(t)
        for j in range(self.dim):
            others = np.prod(np.delete(values, j, axis=1), axis=1)
            grad[:, j] = self.amplitude * derivs[:, j] * others / self.widths[j]
        return grad

    def partial(self, points, axis, order):
        if not 1 <= order <= 4:
            raise ValueError(f"Derivative order must be 1-4, got {order}")
        t = self._scaled(as_points(points, self.dim))
        others = np.prod(np.delete(bump_profile(t), axis, axis=1), axis=1)
        return self.amplitude * bump_profile(t[:, axis], order) * others / self.widths[axis] ** order

    @property
    def sup_bound(self):
        return self.base + max(0.0, self.amplitude)

    def derivative_sup(self, alpha: Sequence[int]) -> float:
        """Exact sup of |∂^α (f − base)|."""
        value = abs(self.amplitude)
        for a, w in zip(alpha, self.widths):
            value *= _BUMP_SUPS[a] / w**a
        return value

    def holder_bound(self, s: float) -> float:
        """Bound on ‖f‖_{C^s}: derivative sups up to ⌊s⌋ plus an interpolated Hölder seminorm."""
        m = int(np.floor(s))
        theta = s - m
        total = abs(self.base)
        for order in range(m + 1):
            for alpha in _multi_indices(self.dim, order):
                total += self.derivative_sup(alpha)
        if theta > 0:
            for alpha in _multi_indices(self.dim, m):
                sup_a = self.derivative_sup(alpha)
                lip = np.sqrt(self.dim) * max(
                    self.derivative_sup(tuple(a + (j == k) for k, a in enumerate(alpha)))
                    for j in range(self.dim)
                )
                total += (2 * sup_a) ** (1 - theta) * lip**theta
        return float(total)

    def describe(self):
        return {
            "type": "bump",
            "center": list(self.center),
            "widths": list(self.widths),
            "amplitude": self.amplitude,
            "base": self.base,
        }


@dataclass(frozen=True)
class SumOfBumps(DiffusivityField):
    """base + Σ of bump perturbations (each bump's own base is ignored)."""

    bumps: Tuple[BumpField, ...]
    base: float = 1.0
    f_min: Optional[float] = None

    def __post_init__(self):
        if not self.bumps:
            raise ValueError("SumOfBumps needs at least one bump")
        object.__setattr__(self, "bumps", tuple(self.bumps))
        if self.f_min is None:
            negative = sum(min(0.0, b.amplitude) for b in self.bumps)
            object.__setattr__(self, "f_min", self.base + negative)

    @property
    def dim(self) -> int:
        return self.bumps[0].dim

    def evaluate(self, points):
        total = np.full(np.atleast_2d(points).shape[0], float(self.base))
        for b in self.bumps:
            total += b.evaluate(points) - b.base
        return total

    def gradient(self, points):
        return sum(b.gradient(points) for b in self.bumps)

    def partial(self, points, axis, order):
        return sum(b.partial(points, axis, order) for b in self.bumps)

    @property
    def sup_bound(self):
        return self.base + sum(max(0.0, b.amplitude) for b in self.bumps)

    def holder_bound(self, s):
        return abs(self.base) + sum(b.holder_bound(s) - abs(b.base) for b in self.bumps)

    def describe(self):
        return {"type": "sum_of_bumps", "base": self.base, "bumps": [b.describe() for b in self.bumps]}


@dataclass(frozen=True, eq=False)
class GridField(DiffusivityField):
    """Values on a rectilinear lattice with linear (or cubic) interpolation.

    Points outside the lattice take ``fill_value``.
    """

    axes: Tuple[np.ndarray, ...]
    values: np.ndarray
    method: str = "linear"
    fill_value: float = 0.0
    f_min: Optional[float] = None
    _interp: Any = field(init=False, repr=False)

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        values = np.asarray(self.values, dtype=float).reshape(tuple(a.size for a in axes))
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)
        object.__setattr__(
            self,
            "_interp",
            RegularGridInterpolator(
                axes, values, method=self.method, bounds_error=False, fill_value=self.fill_value
            ),
        )

    @property
    def dim(self) -> int:
        return len(self.axes)

    def evaluate(self, points):
        return self._interp(np.atleast_2d(points))

    @property
    def sup_bound(self):
        return float(max(self.values.max(), self.fill_value))

    def describe(self):
        return {"type": "grid", "shape": list(self.values.shape), "method": self.method}


@dataclass(frozen=True, eq=False)
class TruncatedField(DiffusivityField):
    """min(f, M)_+ of another field."""

    inner: ScalarField
    upper: float

    def __post_init__(self):
        if self.upper <= 0:
            raise ValueError(f"Truncation level must be positive: {self.upper}")

    @property
    def dim(self) -> int:
        return self.inner.dim

    def evaluate(self, points):
        return np.clip(self.inner.evaluate(points), 0.0, self.upper)

    @property
    def sup_bound(self):
        return float(self.upper)

    def describe(self):
        return {"type": "truncated", "upper": self.upper}


@dataclass(frozen=True, eq=False)
class PerturbedField(DiffusivityField):
    """f0 + ε·h for a base field f0 and a perturbation h (h = 0 outside K)."""

    base_field: DiffusivityField
    perturbation: ScalarField
    epsilon: float

    @property
    def dim(self) -> int:
        return self.base_field.dim

    @property
    def f_min(self):
        return self.base_field.f_min

    def evaluate(self, points):
        return self.base_field.evaluate(points) + self.epsilon * self.perturbation.evaluate(points)

    def gradient(self, points):
        return self.base_field.gradient(points) + self.epsilon * self.perturbation.gradient(points)

    @property
    def sup_bound(self):
        base_sup = self.base_field.sup_bound
        pert = getattr(self.perturbation, "sup_bound", None)
        if base_sup is None or pert is None:
            return None
        return base_sup + abs(self.epsilon) * abs(pert)

    def describe(self):
        return {"type": "perturbed", "epsilon": self.epsilon, "base": self.base_field.describe()}
