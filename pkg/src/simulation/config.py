"""Simulation settings and the observation container."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..geometry.domain import DomainSpec
from ..geometry.regions import NestedRegions
from ..models.fields import DiffusivityField
from ..utils.constants import SUBSTEP_DELTA_FRACTION
from ..utils.errors import ConfigError, DomainError
from ..utils.logger import get_logger
from ..utils.numerics import midpoint_grid

logger = get_logger(__name__)


class DriftMode(str, Enum):
    """Drift b(∇f(X), X) of the reflected diffusion.

    GRADIENT is the divergence-form model (b(x, y) = x, drift ∇f, uniform
    invariant measure); GENERIC uses a nuisance vector field G(X); NONE is
    the drift-free Euler scheme underlying the proxy density.
    """

    GRADIENT = "gradient"
    GENERIC = "generic"
    NONE = "none"


@dataclass(frozen=True)
class GenericDrift:
    """Nuisance drift G(y).

    Attributes:
        kind: "constant" (G ≡ vector) or "linear" (G(y) = −kappa (y − center))
        vector: Constant drift vector
        kappa: Mean-reversion rate of the linear drift
        center: Attraction point of the linear drift
    """

    kind: str
    vector: Tuple[float, ...] = ()
    kappa: float = 0.0
    center: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "linear"):
            raise ConfigError(f"Unknown generic drift kind: {self.kind}")
        if self.kind == "constant" and not self.vector:
            raise ConfigError("Constant drift needs a vector")
        if self.kind == "linear" and (not self.center or self.kappa < 0):
            raise ConfigError("Linear drift needs a center and kappa >= 0")
        object.__setattr__(self, "vector", tuple(float(v) for v in self.vector))
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.broadcast_to(np.asarray(self.vector), points.shape)
        return -self.kappa * (points - np.asarray(self.center))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "vector": list(self.vector), "kappa": self.kappa, "center": list(self.center)}


@dataclass(frozen=True, eq=False)
class SdeConfig:
    """Everything needed to simulate observations of the reflected diffusion.

    Attributes:
        f: Diffusivity
        regions: Domain with its nested regions
        D: Sampling interval
        N: Number of observed increments
        seed: 64-bit seed
        drift_mode: Drift choice
        drift: Nuisance drift for GENERIC mode
        substeps: Euler substeps per interval; derived from δ and ‖f‖∞ when None
        truth_id: Provenance tag of f
    """

    f: DiffusivityField
    regions: NestedRegions
    D: float
    N: int
    seed: int = 0
    drift_mode: DriftMode = DriftMode.GRADIENT
    drift: Optional[GenericDrift] = None
    substeps: Optional[int] = None
    truth_id: Optional[str] = None
    f_sup: float = field(init=False)

    def __post_init__(self):
        """Validate and resolve the diffusivity bound used by the substep rule."""
        object.__setattr__(self, "drift_mode", DriftMode(self.drift_mode))
        if self.D <= 0:
            raise ConfigError(f"Sampling interval D must be positive: {self.D}")
        if self.N < 1:
            raise ConfigError(f"N must be at least 1: {self.N}")
        if self.substeps is not None and self.substeps < 1:
            raise ConfigError(f"substeps must be at least 1: {self.substeps}")
        if self.drift_mode is DriftMode.GENERIC and self.drift is None:
            raise ConfigError("drift_mode 'generic' needs a drift specification")
        if self.f.dim != self.regions.domain.dim:
            raise ConfigError(
                f"Field dimension {self.f.dim} differs from domain dimension {self.regions.domain.dim}"
            )
        bound = self.f.sup_bound
        if bound is None:
            lo, hi = self.regions.domain.bounding_box
            nodes, _, _ = midpoint_grid(lo, hi, 64.0 / float(np.max(hi - lo)))
            bound = float(np.max(self.f.evaluate(nodes)))
        object.__setattr__(self, "f_sup", float(bound))

    @property
    def dim(self) -> int:
        return self.regions.domain.dim

    @property
    def substep_count(self) -> int:
        """m with δt = D/m ≤ (δ/10)² / (2‖f‖∞), unless overridden."""
        if self.substeps is not None:
            return int(self.substeps)
        dt_max = (SUBSTEP_DELTA_FRACTION * self.regions.delta) ** 2 / (2.0 * max(self.f_sup, 1e-12))
        return max(1, int(np.ceil(self.D / dt_max - 1e-9)))

    @property
    def dt(self) -> float:
        return self.D / self.substep_count

    @property
    def horizon(self) -> float:
        """N·D."""
        return self.N * self.D

    @property
    def nd_squared(self) -> float:
        """N·D², small in the high-frequency regime."""
        return self.N * self.D**2

    def regime_report(self, spectral_rate: Optional[float] = None) -> Dict[str, float]:
        """N·D, N·D², substeps and optionally the spectral-gap proxy r·D."""
        report = {
            "N": float(self.N),
            "D": self.D,
            "ND": self.horizon,
            "ND2": self.nd_squared,
            "substeps": float(self.substep_count),
        }
        if spectral_rate is not None:
            report["spectral_gap_rD"] = spectral_rate * self.D
        return report


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Observed states X_0, X_D, ..., X_{ND}.

    Attributes:
        points: Array of shape (N + 1, d)
        D: Sampling interval
        seed: Seed that produced the data
        domain: Domain the states live in (checked when given)
        f_truth_id: Provenance tag of the generating diffusivity
        metadata: Extra key-value provenance written to the sidecar
    """

    points: np.ndarray
    D: float
    seed: int = 0
    domain: Optional[DomainSpec] = None
    f_truth_id: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.shape[0] < 1:
            raise ValueError("ObservationSet needs at least one state")
        if self.D <= 0:
            raise ValueError(f"Sampling interval must be positive: {self.D}")
        object.__setattr__(self, "points", points)
        if self.domain is not None and not np.all(self.domain.contains(points, tol=1e-12)):
            raise DomainError("Observed states must lie in the closure of the domain")

    @property
    def N(self) -> int:
        return self.points.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def starts(self) -> np.ndarray:
        return self.points[:-1]

    @property
    def ends(self) -> np.ndarray:
        return self.points[1:]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.points.shape[0]) * self.D
