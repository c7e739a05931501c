"""Gaussian priors for the exponent W of f = Φ(χW): Matérn processes and
truncated wavelet series, with the N-dependent rescaling.

Contract (GaussianPrior):
    - ``w`` is a flat vector (grid values or wavelet coefficients) of a draw
      of the unrescaled process V; ``draw`` returns w ~ N(0, C).
    - ``field(w)`` is the corresponding ScalarField V.
    - ``evaluator(points)`` returns a function w -> V(points), linear in w,
      precomputed once per point set for use inside a sampler.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Tuple, Union

import numpy as np
from scipy import linalg, special
from scipy.spatial.distance import cdist

from ..geometry.regions import NestedRegions
from ..models.fields import DiffusivityField, GridField, ScalarField
from ..models.link import link_phi_inverse
from ..utils.constants import DEFAULT_MATERN_JITTER, MATERN_JITTER_GROWTH, MAX_MATERN_GRID_POINTS
from ..utils.errors import ConfigError, NumericalError
from ..utils.logger import get_logger
from ..utils.rng import make_rng
from ..wavelets.basis import BasisSpec
from ..wavelets.projection import CoeffVector, ExpansionField, project

logger = get_logger(__name__)


def rescale_factor(N: int, s: float, d: int) -> float:
    """N^{d/(4s+2d)}, the divisor applied to V.

    Example:
        >>> round(rescale_factor(1024, 2.0, 1), 12)
        2.0
    """
    if N < 1:
        raise ValueError(f"N must be at least 1: {N}")
    return float(N) ** (d / (4.0 * s + 2.0 * d))


def rescale(V, N: int, s: float, d: int):
    """W = V / N^{d/(4s+2d)} for coefficient vectors, grid fields or arrays."""
    factor = rescale_factor(N, s, d)
    if isinstance(V, CoeffVector):
        return V.scaled(1.0 / factor)
    if isinstance(V, GridField):
        return GridField(axes=V.axes, values=V.values / factor, method=V.method, fill_value=V.fill_value)
    return np.asarray(V, dtype=float) / factor


class GaussianPrior(ABC):
    """Mean-zero Gaussian prior on a finite representation of V."""

    @property
    @abstractmethod
    def size(self) -> int:
        """Length of the representation w."""
        pass

    @property
    @abstractmethod
    def s(self) -> float:
        """Smoothness parameter."""
        pass

    @abstractmethod
    def draw(self, rng: np.random.Generator) -> np.ndarray:
        """One draw of w."""
        pass

    @abstractmethod
    def field(self, w: np.ndarray) -> ScalarField:
        """The function V represented by w."""
        pass

    @abstractmethod
    def evaluator(self, points: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """w -> V(points) for a fixed point set."""
        pass


# ----------------------------------------------------------------------
# Matérn
# ----------------------------------------------------------------------
def matern_kernel(r: np.ndarray, nu: float) -> np.ndarray:
    """K(r) = 2^{1−ν}/Γ(ν) r^ν K_ν(r) with K(0) = 1."""
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    positive = r > 0
    rp = r[positive]
    out[positive] = 2.0 ** (1.0 - nu) / special.gamma(nu) * rp**nu * special.kv(nu, rp)
    return out


@dataclass(frozen=True, eq=False)
class MaternSpec:
    """Matérn process of regularity ν = s − d/2 on a lattice.

    Attributes:
        s: Smoothness
        axes: Lattice coordinates per axis
        jitter: Diagonal regularizer added before factorization
    """

    s: float
    axes: Tuple[np.ndarray, ...]
    jitter: float = DEFAULT_MATERN_JITTER

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        if self.s <= self.dim / 2.0:
            raise ConfigError(f"Matérn prior needs s > d/2; got s={self.s}, d={self.dim}")
        if self.n_points > MAX_MATERN_GRID_POINTS:
            raise ConfigError(
                f"Matérn lattice has {self.n_points} points; dense factorization allows "
                f"{MAX_MATERN_GRID_POINTS}"
            )

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def nu(self) -> float:
        return self.s - self.dim / 2.0

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.shape))

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def covariance(self) -> np.ndarray:
        return matern_kernel(cdist(self.points, self.points), self.nu)


def matern_lattice(regions: NestedRegions, points_per_axis: int) -> Tuple[np.ndarray, ...]:
    """Axes of a lattice spanning the bounding box of O_0 (endpoints included)."""
    lo, hi = regions.O_0.bounding_box
    return tuple(np.linspace(l, h, points_per_axis) for l, h in zip(lo, hi))


def _cholesky(covariance: np.ndarray, jitter: float) -> np.ndarray:
    eye = np.eye(covariance.shape[0])
    try:
        return linalg.cholesky(covariance + jitter * eye, lower=True)
    except linalg.LinAlgError:
        bigger = jitter * MATERN_JITTER_GROWTH
        logger.warning(f"Matérn factorization failed; retrying with jitter {bigger:.1e}")
    try:
        return linalg.cholesky(covariance + bigger * eye, lower=True)
    except linalg.LinAlgError as e:
        raise NumericalError(f"Matérn covariance not factorizable with jitter {bigger:.1e}") from e


class MaternPrior(GaussianPrior):
    """Matérn prior represented by lattice values; V interpolates linearly, 0 off the lattice."""

    def __init__(self, spec: MaternSpec):
        self.spec = spec
        self.factor = _cholesky(spec.covariance(), spec.jitter)

    @property
    def size(self) -> int:
        return self.spec.n_points

    @property
    def s(self) -> float:
        return self.spec.s

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return self.factor @ rng.standard_normal(self.size)

    def field(self, w: np.ndarray) -> GridField:
        return GridField(axes=self.spec.axes, values=np.asarray(w).reshape(self.spec.shape))

    def evaluator(self, points: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        points = np.atleast_2d(points)
        return lambda w: self.field(w).evaluate(points)


def sample_matern(spec: MaternSpec, seed: int) -> GridField:
    """One Matérn draw V on the lattice."""
    prior = MaternPrior(spec)
    return prior.field(prior.draw(make_rng(seed)))


# ----------------------------------------------------------------------
# Wavelet series
# ----------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class WaveletPriorSpec:
    """V = Σ_{l=J0}^{J} Σ_r 2^{−ls} g_lr ψ_lr with g_lr iid N(0, 1)."""

    s: float
    basis: BasisSpec

    def __post_init__(self):
        if self.s <= 0:
            raise ConfigError(f"Wavelet prior smoothness must be positive: {self.s}")

    @property
    def J0(self) -> int:
        return self.basis.J0

    @property
    def J(self) -> int:
        return self.basis.J

    @property
    def scales(self) -> np.ndarray:
        """2^{−ls} per basis index."""
        return 2.0 ** (-self.basis.levels * self.s)


class WaveletSeriesPrior(GaussianPrior):
    """Truncated wavelet-series prior represented by its coefficients."""

    def __init__(self, spec: WaveletPriorSpec):
        self.spec = spec
        self._scales = spec.scales

    @property
    def size(self) -> int:
        return self.spec.basis.size

    @property
    def s(self) -> float:
        return self.spec.s

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        return self._scales * rng.standard_normal(self.size)

    def field(self, w: np.ndarray) -> ExpansionField:
        return ExpansionField(coeffs=CoeffVector(self.spec.basis, w), baseline=0.0)

    def evaluator(self, points: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        design = self.spec.basis.design_matrix(np.atleast_2d(points))
        return lambda w: design @ w


def sample_wavelet_series(spec: WaveletPriorSpec, seed: int) -> CoeffVector:
    """Coefficients 2^{−ls} g_lr of one draw."""
    return CoeffVector(spec.basis, WaveletSeriesPrior(spec).draw(make_rng(seed)))


def rkhs_norm(coeffs: CoeffVector, s: float, N: int = 1) -> Dict[str, float]:
    """RKHS norm of Σ c ψ under the wavelet-series prior, before and after rescaling.

    ‖h‖²_{H_V} = Σ 2^{2ls} c², and the rescaled process W = V/N^{d/(4s+2d)}
    has ‖h‖_{H_W} = N^{d/(4s+2d)} ‖h‖_{H_V}.
    """
    weights = 2.0 ** (2.0 * coeffs.basis.levels * s)
    unscaled = float(np.sqrt(np.sum(weights * coeffs.values**2)))
    return {
        "unscaled": unscaled,
        "rescaled": unscaled * rescale_factor(N, s, coeffs.basis.dim),
    }


def truth_rkhs_report(
    basis: BasisSpec, f0: DiffusivityField, f_min: float, s: float, N: int
) -> Dict[str, Any]:
    """RKHS norms of v_{0,N}, the level-J projection of w0 = Φ⁻¹(f0)."""

    def w0(points):
        return link_phi_inverse(f0.evaluate(points), f_min)

    coeffs = project(basis, w0)
    report: Dict[str, Any] = rkhs_norm(coeffs, s, N)
    report["J"] = basis.J
    return report


PriorSpec = Union[MaternSpec, WaveletPriorSpec]


def build_prior(spec: PriorSpec) -> GaussianPrior:
    if isinstance(spec, MaternSpec):
        return MaternPrior(spec)
    if isinstance(spec, WaveletPriorSpec):
        return WaveletSeriesPrior(spec)
    raise ConfigError(f"Unknown prior specification: {type(spec).__name__}")
