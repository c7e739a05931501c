"""The link Φ(x) = f_min + (1 − f_min)e^x and link-composed fields f = Φ(χW + Φ⁻¹(g))."""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..geometry.cutoff import CutoffField
from ..utils.errors import MembershipError
from .fields import ConstantField, DiffusivityField, ScalarField


def link_phi(x, f_min: float) -> np.ndarray:
    """Φ(x) = f_min + (1 − f_min) e^x; strictly increasing with Φ(0) = 1.

    ``f_min = 0`` gives the exponential link.
    """
    if not 0.0 <= f_min < 1.0:
        raise ValueError(f"f_min must lie in [0, 1): {f_min}")
    return f_min + (1.0 - f_min) * np.exp(x)


def link_phi_inverse(y, f_min: float) -> np.ndarray:
    """Φ⁻¹(y) = log((y − f_min)/(1 − f_min)).

    Raises:
        MembershipError: If any y ≤ f_min
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= f_min):
        worst = float(np.min(y))
        raise MembershipError(
            f"Link inverse needs y > f_min={f_min}, got {worst}",
            bound="f_min",
            value=worst,
            limit=f_min,
        )
    return np.log((y - f_min) / (1.0 - f_min))


@dataclass(frozen=True, eq=False)
class LinkedField(DiffusivityField):
    """f(x) = Φ(χ(x) w(x) + Φ⁻¹(g(x))), with g ≡ 1 (so Φ⁻¹(g) = 0) by default.

    Attributes:
        w: Underlying field (a prior draw, possibly rescaled)
        cutoff: Cutoff χ
        f_min: Link lower bound
        baseline: Known boundary field g ≥ 2 f_min, or None for g ≡ 1
    """

    w: ScalarField
    cutoff: CutoffField
    f_min: float
    baseline: Optional[ScalarField] = None

    @property
    def dim(self) -> int:
        return self.cutoff.regions.domain.dim

    def exponent(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        chi = self.cutoff.evaluate(pts)
        inner = np.zeros(pts.shape[0])
        active = chi > 0
        if np.any(active):
            inner[active] = chi[active] * self.w.evaluate(pts[active])
        if self.baseline is not None:
            inner += link_phi_inverse(self.baseline.evaluate(pts), self.f_min)
        return inner

    def evaluate(self, points):
        return link_phi(self.exponent(points), self.f_min)

    def describe(self):
        return {"type": "linked", "f_min": self.f_min, "baseline": self.baseline is not None}


def compose_field(
    w: ScalarField,
    cutoff: CutoffField,
    f_min: float,
    baseline: Optional[Union[ScalarField, float]] = None,
) -> LinkedField:
    """Build f = Φ(χ w) (or Φ(χ w + Φ⁻¹(g)) with a known baseline g).

    The result equals 1 (resp. g) outside O_0 and is ≥ f_min everywhere.
    """
    if isinstance(baseline, (int, float)):
        if float(baseline) == 1.0:
            baseline = None
        else:
            baseline = ConstantField(float(baseline), cutoff.regions.domain.dim)
    return LinkedField(w=w, cutoff=cutoff, f_min=f_min, baseline=baseline)
