"""Assouad hypercube of perturbed truths f_ε = 1 + γ Σ_ℓ ε_ℓ ψ_{J,ℓ}.

The ψ_{J,ℓ} are all-wavelet tensor functions at level J with translations
spaced by the support length, so their supports are pairwise disjoint and
sit inside a cube contained in K.
"""

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from ..geometry.domain import DomainSpec, Shape
from ..geometry.regions import NestedRegions
from ..utils.errors import MembershipError
from ..utils.logger import get_logger
from ..wavelets.basis import TensorIndex
from ..wavelets.family import WaveletFamily
from ..wavelets.projection import WaveletSeriesField
from .rates import level_for_rate

logger = get_logger(__name__)

DEFAULT_GAMMA_SCALE = 0.5
DEFAULT_J_SCALE = 1.0
CLIP_MARGIN = 0.9


@dataclass(frozen=True, eq=False)
class AssouadFamily:
    """The 2^m members indexed by sign vectors ε ∈ {−1, +1}^m.

    Attributes:
        family: Wavelet family providing ψ
        level: Level J
        gamma: Perturbation size γ
        indices: The m disjoint-support tensor wavelets
        f_min: Lower bound used in the membership check
        s: Smoothness of the Hölder-ball surrogate
        M: Bound on the Besov proxy of the perturbation
    """

    family: WaveletFamily
    level: int
    gamma: float
    indices: Tuple[TensorIndex, ...]
    f_min: float
    s: float
    M: float

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def dim(self) -> int:
        return len(self.indices[0].translation)

    def member(self, signs: Sequence[int]) -> WaveletSeriesField:
        """f_ε for a sign vector of length ``size``."""
        signs = np.asarray(signs, dtype=float)
        if signs.shape != (self.size,) or not np.all(np.abs(signs) == 1):
            raise ValueError(f"Expected {self.size} signs in {{-1, +1}}, got {signs}")
        return WaveletSeriesField(
            family=self.family,
            indices=self.indices,
            values=self.gamma * signs,
            offset=1.0,
            f_min=self.f_min,
        )

    def members(self) -> Iterator[WaveletSeriesField]:
        """Every member, in lexicographic order of the sign vectors."""
        for signs in itertools.product((-1, 1), repeat=self.size):
            yield self.member(signs)

    def __iter__(self):
        return self.members()

    def random_signs(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n random corners, shape (n, size)."""
        return rng.choice(np.array([-1, 1]), size=(n, self.size))

    @property
    def sup_deviation(self) -> float:
        """sup |f_ε − 1| = γ 2^{Jd/2} ‖ψ‖_∞^d (supports are disjoint)."""
        return self.gamma * 2.0 ** (self.level * self.dim / 2.0) * self.family.psi_sup**self.dim

    @property
    def besov_proxy(self) -> float:
        """γ 2^{J(s + d/2)}, the Besov-norm surrogate of the perturbation."""
        return self.gamma * 2.0 ** (self.level * (self.s + self.dim / 2.0))

    @property
    def lower_bound(self) -> float:
        """2^{Jd} γ², the order of the minimax risk lower bound."""
        return 2.0 ** (self.level * self.dim) * self.gamma**2

    def pair_distance_squared(self, signs_a: Sequence[int], signs_b: Sequence[int]) -> float:
        """‖f_a − f_b‖²_2 = 4γ² × (number of differing signs)."""
        flips = int(np.sum(np.asarray(signs_a) != np.asarray(signs_b)))
        return 4.0 * self.gamma**2 * flips


def _cube_translations(family: WaveletFamily, cube: DomainSpec, level: int) -> np.ndarray:
    S = family.support_length
    scale = 2.0**level
    per_axis = []
    for lo, hi in zip(*cube.bounding_box):
        start = int(np.ceil(lo * scale - 1e-12))
        stop = int(np.floor(hi * scale + 1e-12)) - S
        per_axis.append(np.arange(start, stop + 1, S))
    return np.array(list(itertools.product(*per_axis)), dtype=int).reshape(-1, cube.dim)


def default_cube(regions: NestedRegions) -> DomainSpec:
    """The largest axis-aligned box inside K."""
    K = regions.K
    if K.shape is Shape.HYPERRECTANGLE:
        return K
    half = K.radius / np.sqrt(K.dim)
    c = np.asarray(K.center)
    return DomainSpec.hyperrectangle(c - half, c + half)


def assouad_family(
    d: int,
    s: float,
    N: int,
    cube: DomainSpec,
    family: WaveletFamily,
    gamma_scale: Optional[float] = None,
    J_scale: Optional[float] = None,
    f_min: float = 0.25,
    M: float = 10.0,
    regions: Optional[NestedRegions] = None,
) -> AssouadFamily:
    """Build the Assouad family for sample size N.

    γ = γ_scale · N^{−1/2} and 2^J = round(J_scale · N^{1/(2s+d)}). Default
    scales are clipped to keep inf f ≥ 2 f_min and the Besov proxy ≤ M;
    explicit scales that break a bound raise.

    Args:
        d: Dimension
        s: Smoothness
        N: Sample size
        cube: Box holding the supports; must lie in K when regions are given
        family: Wavelet family
        gamma_scale: γ_scale, default 0.5 (clipped)
        J_scale: J_scale, default 1.0
        f_min: Link lower bound
        M: Bound on the Besov proxy
        regions: Nested regions used to check cube ⊂ K

    Raises:
        MembershipError: If the cube leaves K, no support fits in the cube, or
            an explicit scale violates a membership bound
    """
    if cube.shape is not Shape.HYPERRECTANGLE or cube.dim != d:
        raise ValueError(f"Assouad cube must be a {d}-dimensional hyperrectangle")
    if regions is not None:
        corners = np.array(list(itertools.product(*zip(*cube.bounding_box))))
        if not np.all(regions.K.contains(corners, tol=1e-12)):
            raise MembershipError("Assouad cube is not contained in K", bound="cube_in_K")

    level = level_for_rate(N, s, d, DEFAULT_J_SCALE if J_scale is None else J_scale)
    translations = _cube_translations(family, cube, level)
    if translations.shape[0] == 0:
        raise MembershipError(
            f"No level-{level} wavelet support fits in the cube; increase J_scale",
            bound="nonempty_index_set",
            value=0.0,
            limit=1.0,
        )
    kind = (1,) * d
    indices = tuple(TensorIndex(level, tuple(int(v) for v in r), kind) for r in translations)

    dev_per_gamma = 2.0 ** (level * d / 2.0) * family.psi_sup**d
    besov_per_gamma = 2.0 ** (level * (s + d / 2.0))
    gamma_limits = {
        "inf_f>=2f_min": (1.0 - 2.0 * f_min) / dev_per_gamma,
        "besov_proxy<=M": M / besov_per_gamma,
    }
    root_n = np.sqrt(float(N))
    if gamma_scale is None:
        gamma = DEFAULT_GAMMA_SCALE / root_n
        limit = CLIP_MARGIN * min(gamma_limits.values())
        if gamma > limit:
            logger.debug(f"Assouad gamma clipped from {gamma:.3e} to {limit:.3e}")
            gamma = limit
    else:
        gamma = gamma_scale / root_n
        for name, limit in gamma_limits.items():
            if gamma > limit:
                raise MembershipError(
                    f"gamma={gamma:.3e} violates {name} (largest admissible gamma {limit:.3e})",
                    bound=name,
                    value=gamma,
                    limit=limit,
                )

    return AssouadFamily(
        family=family,
        level=level,
        gamma=float(gamma),
        indices=indices,
        f_min=f_min,
        s=s,
        M=M,
    )
