"""Tensor Daubechies bases V_J adapted to the interior region O_0.

An index (l, r, e) stands for ψ_{l,r,e}(x) = Π_j 2^{l/2} ψ^{e_j}(2^l x_j − r_j)
with ψ^0 = φ and ψ^1 = ψ. The coarse level J0 carries every kind pattern,
finer levels only the patterns with at least one wavelet factor.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from ..geometry.domain import DomainSpec, Shape
from ..geometry.regions import NestedRegions
from ..utils.errors import BasisError
from ..utils.logger import get_logger
from .family import WaveletFamily

logger = get_logger(__name__)

_EPS = 1e-12
MAX_SEARCH_LEVEL = 24


@dataclass(frozen=True, order=True)
class TensorIndex:
    """One tensor basis function.

    Attributes:
        level: Resolution level l
        translation: Translation vector r
        kind: Per-axis pattern, 0 for φ and 1 for ψ
    """

    level: int
    translation: Tuple[int, ...]
    kind: Tuple[int, ...]

    @property
    def label(self) -> str:
        """Kind pattern as a string, e.g. ``"sw"`` for φ ⊗ ψ."""
        return "".join("w" if e else "s" for e in self.kind)

    def support(self, support_length: int) -> Tuple[np.ndarray, np.ndarray]:
        """Closed support box [r 2^-l, (r + S) 2^-l]."""
        r = np.asarray(self.translation, dtype=float)
        scale = 2.0**-self.level
        return r * scale, (r + support_length) * scale


def kind_patterns(dim: int, coarse: bool) -> List[Tuple[int, ...]]:
    """All kind patterns at a level; the all-scaling pattern only at the coarse level."""
    patterns = list(itertools.product((0, 1), repeat=dim))
    return patterns if coarse else [e for e in patterns if any(e)]


def _box_meets_open(region: DomainSpec, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Whether boxes (rows of lo, hi) intersect the interior of ``region``."""
    if region.shape is Shape.HYPERRECTANGLE:
        return np.all(
            (hi > np.asarray(region.lower) + _EPS) & (lo < np.asarray(region.upper) - _EPS), axis=1
        )
    c = np.asarray(region.center)
    nearest = np.clip(c, lo, hi)
    return np.linalg.norm(nearest - c, axis=1) < region.radius - _EPS


def _box_inside(region: DomainSpec, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Whether boxes lie in the closed ``region``."""
    if region.shape is Shape.HYPERRECTANGLE:
        return np.all(
            (lo >= np.asarray(region.lower) - _EPS) & (hi <= np.asarray(region.upper) + _EPS), axis=1
        )
    c = np.asarray(region.center)
    farthest = np.maximum(np.abs(lo - c), np.abs(hi - c))
    return np.linalg.norm(farthest, axis=1) <= region.radius + _EPS


def level_translations(family: WaveletFamily, regions: NestedRegions, level: int) -> np.ndarray:
    """Translations r at ``level`` whose support meets O_0 (the set R_l).

    Returns:
        Integer array of shape (m, d)
    """
    S = family.support_length
    scale = 2.0**level
    lo, hi = regions.O_0.bounding_box
    ranges = [
        np.arange(int(np.floor(a * scale - S)) + 1, int(np.ceil(b * scale)))
        for a, b in zip(lo, hi)
    ]
    grid = np.array(list(itertools.product(*ranges)), dtype=int).reshape(-1, len(ranges))
    if grid.size == 0:
        return grid
    box_lo = grid / scale
    box_hi = (grid + S) / scale
    return grid[_box_meets_open(regions.O_0, box_lo, box_hi)]


def level_is_feasible(family: WaveletFamily, regions: NestedRegions, level: int) -> bool:
    """True iff no support meeting O_0 at ``level`` leaves O_0^δ."""
    r = level_translations(family, regions, level)
    if r.size == 0:
        return True
    scale = 2.0**level
    return bool(np.all(_box_inside(regions.O_0_delta, r / scale, (r + family.support_length) / scale)))


def minimal_feasible_level(family: WaveletFamily, regions: NestedRegions) -> int:
    """Smallest J0 satisfying the support-separation condition.

    Raises:
        BasisError: If no level up to the search limit is feasible
    """
    for level in range(MAX_SEARCH_LEVEL + 1):
        if level_is_feasible(family, regions, level):
            return level
    raise BasisError(f"No feasible coarse level up to {MAX_SEARCH_LEVEL} for delta={regions.delta}")


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """The basis of V_J restricted to indices meeting O_0.

    Attributes:
        family: Wavelet family
        regions: Nested regions of the domain
        J0: Coarse level
        J: Finest level
        indices: Basis indices ordered by level, kind, translation
        level_counts: Number of indices per level
    """

    family: WaveletFamily
    regions: NestedRegions
    J0: int
    J: int
    indices: Tuple[TensorIndex, ...]
    level_counts: Dict[int, int]
    _lookup: Dict[Tuple[int, Tuple[int, ...]], Tuple[np.ndarray, np.ndarray]] = field(
        repr=False, default_factory=dict
    )

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def dim(self) -> int:
        return self.regions.domain.dim

    @property
    def size(self) -> int:
        return len(self.indices)

    @property
    def levels(self) -> np.ndarray:
        return np.array([idx.level for idx in self.indices])

    def position(self, index: TensorIndex) -> int:
        return self._positions[index]

    @property
    def _positions(self) -> Dict[TensorIndex, int]:
        cached = self.__dict__.get("_position_cache")
        if cached is None:
            cached = {idx: k for k, idx in enumerate(self.indices)}
            object.__setattr__(self, "_position_cache", cached)
        return cached

    def evaluate(self, index: TensorIndex, x) -> np.ndarray:
        """ψ_{l,r,e} at points of shape (n, d)."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        scale = 2.0**index.level
        values = np.full(pts.shape[0], scale ** (self.dim / 2.0))
        for j, (r, e) in enumerate(zip(index.translation, index.kind)):
            values *= self.family.profile(e, scale * pts[:, j] - r)
        return values

    def design_matrix(self, points) -> sparse.csr_matrix:
        """Sparse matrix of all basis functions at the given points, shape (n, K)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n, d = pts.shape
        S = self.family.support_length
        rows, cols, vals = [], [], []
        point_ids = np.arange(n)
        for level in range(self.J0, self.J + 1):
            scale = 2.0**level
            u = pts * scale
            base = np.floor(u).astype(int)
            for kind in kind_patterns(d, level == self.J0):
                lookup, r_min = self._lookup[(level, kind)]
                for offsets in itertools.product(range(S), repeat=d):
                    r = base - np.asarray(offsets)
                    local = r - r_min
                    ok = np.all((local >= 0) & (local < np.asarray(lookup.shape)), axis=1)
                    if not np.any(ok):
                        continue
                    col = np.full(n, -1)
                    col[ok] = lookup[tuple(local[ok].T)]
                    ok &= col >= 0
                    if not np.any(ok):
                        continue
                    value = np.full(int(ok.sum()), scale ** (d / 2.0))
                    arg = u[ok] - r[ok]
                    for j, e in enumerate(kind):
                        value *= self.family.profile(e, arg[:, j])
                    rows.append(point_ids[ok])
                    cols.append(col[ok])
                    vals.append(value)
        if rows:
            data = (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols)))
            matrix = sparse.coo_matrix(data, shape=(n, self.size))
        else:
            matrix = sparse.coo_matrix((n, self.size))
        return matrix.tocsr()

    def synthesize(self, values: np.ndarray, points) -> np.ndarray:
        """Σ_k values_k ψ_k at the points."""
        return self.design_matrix(points) @ np.asarray(values, dtype=float)


def _build_lookup(indices, dim):
    """Dense translation -> column tables per (level, kind)."""
    grouped: Dict[Tuple[int, Tuple[int, ...]], List[Tuple[Tuple[int, ...], int]]] = {}
    for col, idx in enumerate(indices):
        grouped.setdefault((idx.level, idx.kind), []).append((idx.translation, col))
    lookup = {}
    for key, members in grouped.items():
        trans = np.array([t for t, _ in members], dtype=int).reshape(-1, dim)
        r_min = trans.min(axis=0)
        table = np.full(tuple(trans.max(axis=0) - r_min + 1), -1, dtype=int)
        table[tuple((trans - r_min).T)] = [c for _, c in members]
        lookup[key] = (table, r_min)
    return lookup


def build_basis(
    family: WaveletFamily, regions: NestedRegions, J0: Optional[int] = None, J: Optional[int] = None
) -> BasisSpec:
    """Build the basis of V_J for the given regions.

    Args:
        family: Wavelet family
        regions: Nested regions
        J0: Coarse level; the minimal feasible level when omitted
        J: Finest level; equal to J0 when omitted

    Returns:
        BasisSpec whose supports all meet O_0 and stay inside O_0^δ

    Raises:
        BasisError: If J < J0 or J0 violates support separation (message and
            ``minimal_level`` name the smallest feasible J0)
    """
    minimal = minimal_feasible_level(family, regions)
    J0 = minimal if J0 is None else int(J0)
    J = J0 if J is None else int(J)
    if J < J0:
        raise BasisError(f"J={J} must be at least J0={J0}")
    for level in range(J0, J + 1):
        if not level_is_feasible(family, regions, level):
            raise BasisError(
                f"Level {level} infeasible for delta={regions.delta} with {family.name}; "
                f"minimal feasible J0 is {minimal}",
                minimal_level=minimal,
            )

    dim = regions.domain.dim
    indices: List[TensorIndex] = []
    counts: Dict[int, int] = {}
    for level in range(J0, J + 1):
        translations = [tuple(int(v) for v in r) for r in level_translations(family, regions, level)]
        before = len(indices)
        for kind in kind_patterns(dim, level == J0):
            indices.extend(TensorIndex(level, r, kind) for r in translations)
        counts[level] = len(indices) - before

    basis = BasisSpec(
        family=family,
        regions=regions,
        J0=J0,
        J=J,
        indices=tuple(indices),
        level_counts=counts,
        _lookup=_build_lookup(indices, dim),
    )
    logger.debug(f"Basis {family.name} J0={J0} J={J}: {basis.size} functions, counts {counts}")
    return basis
