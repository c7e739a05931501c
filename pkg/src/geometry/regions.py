"""Nested interior regions K ⊂ O_0 ⊂ O_0^δ ⊂ O built by uniform insets."""

from dataclasses import dataclass

import numpy as np

from ..utils.constants import CUTOFF_K_INSET, CUTOFF_O0_DELTA_INSET, CUTOFF_O0_INSET
from ..utils.errors import DomainError
from ..utils.logger import get_logger
from .domain import DomainSpec

logger = get_logger(__name__)


@dataclass(frozen=True)
class NestedRegions:
    """The interior regions attached to a domain.

    K is inset 3δ from ∂O, O_0 is inset 2δ and O_0^δ (the δ/2-enlargement of
    O_0) is inset 1.5δ. Hence dist(K, ∂O_0) = δ, dist(O_0, ∂O) = 2δ and
    dist(O_0^δ, ∂O) = 1.5δ. O_0 is treated as open: its boundary is outside it.

    Attributes:
        domain: Ambient domain O
        K: Region on which the cutoff equals one
        O_0: Open region outside of which every admissible f equals one
        O_0_delta: Enlargement of O_0 defining the active regression rows
        delta: Separation δ
    """

    domain: DomainSpec
    K: DomainSpec
    O_0: DomainSpec
    O_0_delta: DomainSpec
    delta: float

    def in_K(self, points) -> np.ndarray:
        return self.K.contains(points)

    def in_O0(self, points) -> np.ndarray:
        """Membership in the open region O_0."""
        return self.O_0.signed_distance(points) > 0

    def in_O0_delta(self, points) -> np.ndarray:
        return self.O_0_delta.contains(points)


def build_nested_regions(domain: DomainSpec, delta: float) -> NestedRegions:
    """Build K, O_0 and O_0^δ by uniform insets of the domain.

    Args:
        domain: Ambient convex domain
        delta: Separation δ > 0

    Returns:
        NestedRegions with both separation constraints satisfied

    Raises:
        DomainError: If δ is not positive or the triple inset is empty

    Example:
        >>> regions = build_nested_regions(DomainSpec.unit_cube(2), 0.1)
        >>> regions.K.lower, regions.O_0.lower
        ((0.3, 0.3), (0.2, 0.2))
    """
    if delta <= 0:
        raise DomainError(f"delta must be positive: {delta}")
    if 2.0 * CUTOFF_K_INSET * delta >= domain.min_width:
        raise DomainError(
            f"delta={delta} too large: K inset {CUTOFF_K_INSET * delta} on each side "
            f"empties a domain of minimal width {domain.min_width}"
        )
    regions = NestedRegions(
        domain=domain,
        K=domain.inset(CUTOFF_K_INSET * delta),
        O_0=domain.inset(CUTOFF_O0_INSET * delta),
        O_0_delta=domain.inset(CUTOFF_O0_DELTA_INSET * delta),
        delta=float(delta),
    )
    logger.debug(f"Nested regions built with delta={delta} in dimension {domain.dim}")
    return regions


def offset_region(domain: DomainSpec, distance: float) -> DomainSpec:
    """Inset (positive) or enlarge (negative) a region, e.g. to build start regions."""
    return domain.inset(distance)
