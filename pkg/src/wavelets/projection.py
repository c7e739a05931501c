"""Coefficient vectors, projections onto V_J and the boundary-adapted P̄_J."""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..models.fields import DiffusivityField, ScalarField
from ..utils.constants import DEFAULT_QUADRATURE_EXTRA_LEVELS, MEMBERSHIP_TOLERANCE
from ..utils.errors import MembershipError
from ..utils.logger import get_logger
from ..utils.numerics import midpoint_grid
from .basis import BasisSpec, TensorIndex
from .family import WaveletFamily

logger = get_logger(__name__)

FieldLike = Union[ScalarField, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class CoeffVector:
    """Coefficients aligned with ``basis.indices``."""

    basis: BasisSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size != self.basis.size:
            raise ValueError(
                f"Coefficient length {values.size} does not match basis size {self.basis.size}"
            )
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def scaled(self, factor: float) -> "CoeffVector":
        return CoeffVector(self.basis, self.values * factor)

    def to_frame(self) -> pd.DataFrame:
        """Rows ``l,kind,r1..rd,value``."""
        d = self.basis.dim
        records = {
            "l": [idx.level for idx in self.basis.indices],
            "kind": [idx.label for idx in self.basis.indices],
        }
        for j in range(d):
            records[f"r{j + 1}"] = [idx.translation[j] for idx in self.basis.indices]
        records["value"] = self.values
        return pd.DataFrame(records)


def write_coefficients(coeffs: CoeffVector, path) -> None:
    """Write the coefficient CSV."""
    coeffs.to_frame().to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(coeffs)} coefficients to {path}")


def read_coefficients(path, basis: BasisSpec) -> CoeffVector:
    """Read a coefficient CSV onto ``basis``; indices absent from the file get 0.

    Raises:
        ValueError: If the file names an index outside the basis
    """
    frame = pd.read_csv(path)
    d = basis.dim
    values = np.zeros(basis.size)
    for row in frame.itertuples(index=False):
        row = row._asdict()
        index = TensorIndex(
            level=int(row["l"]),
            translation=tuple(int(row[f"r{j + 1}"]) for j in range(d)),
            kind=tuple(1 if ch == "w" else 0 for ch in str(row["kind"])),
        )
        try:
            values[basis.position(index)] = float(row["value"])
        except KeyError as e:
            raise ValueError(f"Index {index} from {path} is not in the basis") from e
    return CoeffVector(basis, values)


def _evaluate(g: FieldLike, points: np.ndarray) -> np.ndarray:
    if isinstance(g, ScalarField):
        return g.evaluate(points)
    return np.asarray(g(points), dtype=float)


def quadrature_nodes(
    basis: BasisSpec, points_per_unit: Optional[float] = None
) -> Tuple[np.ndarray, float]:
    """Midpoint nodes covering every basis support (a dyadic-aligned box around O_0^δ).

    Args:
        basis: Basis whose supports must be covered
        points_per_unit: Node density; 2^(J+4) by default

    Returns:
        Tuple of (nodes, cell volume)
    """
    if points_per_unit is None:
        points_per_unit = 2.0 ** (basis.J + DEFAULT_QUADRATURE_EXTRA_LEVELS)
    lo, hi = basis.regions.O_0_delta.bounding_box
    scale = 2.0**basis.J0
    lo = np.floor(lo * scale) / scale
    hi = np.ceil(hi * scale) / scale
    nodes, cell, _ = midpoint_grid(lo, hi, points_per_unit)
    return nodes, cell


def project(basis: BasisSpec, g: FieldLike, points_per_unit: Optional[float] = None) -> CoeffVector:
    """Coefficients ⟨g, ψ_k⟩ by composite midpoint quadrature.

    Args:
        basis: Target basis
        g: Function supported in O_0 (ScalarField or vectorized callable)
        points_per_unit: Quadrature density; at least 2^(J+4) by default

    Returns:
        CoeffVector of inner products
    """
    nodes, cell = quadrature_nodes(basis, points_per_unit)
    design = basis.design_matrix(nodes)
    values = design.T @ (_evaluate(g, nodes) * cell)
    return CoeffVector(basis, values)


def synthesize(coeffs: CoeffVector, points) -> np.ndarray:
    """Σ c_k ψ_k at the points."""
    return coeffs.basis.synthesize(coeffs.values, points)


def gram_matrix(basis: BasisSpec, points_per_unit: Optional[float] = None) -> np.ndarray:
    """Quadrature Gram matrix ⟨ψ_k, ψ_m⟩ (identity up to quadrature error)."""
    nodes, cell = quadrature_nodes(basis, points_per_unit)
    design = basis.design_matrix(nodes)
    return (design.T @ design).toarray() * cell


def besov_coeff_norms(coeffs: CoeffVector, s: float) -> float:
    """sup_l 2^{l(s + d/2)} max_r |c_lr|."""
    if not np.any(coeffs.values):
        return 0.0
    levels = coeffs.basis.levels
    d = coeffs.basis.dim
    weights = 2.0 ** (levels * (s + d / 2.0))
    return float(np.max(weights * np.abs(coeffs.values)))


@dataclass(frozen=True, eq=False)
class WaveletSeriesField(DiffusivityField):
    """offset(x) + Σ_k c_k ψ_k(x) over an explicit list of tensor indices.

    Attributes:
        family: Wavelet family of the indices
        indices: Tensor indices (need not form a full basis)
        values: Coefficients aligned with ``indices``
        offset: Constant or field added to the series (1 for members of F)
        f_min: Recorded lower bound, if known
    """

    family: WaveletFamily
    indices: Tuple[TensorIndex, ...]
    values: np.ndarray
    offset: Union[float, ScalarField] = 1.0
    f_min: Optional[float] = None
    dimension: int = field(init=False)

    def __post_init__(self):
        if not self.indices:
            raise ValueError("WaveletSeriesField needs at least one index")
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size != len(self.indices):
            raise ValueError(f"{values.size} coefficients for {len(self.indices)} indices")
        object.__setattr__(self, "indices", tuple(self.indices))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dimension", len(self.indices[0].translation))

    @property
    def dim(self) -> int:
        return self.dimension

    def _series(self, pts: np.ndarray) -> np.ndarray:
        total = np.zeros(pts.shape[0])
        for idx, c in zip(self.indices, self.values):
            if c == 0.0:
                continue
            scale = 2.0**idx.level
            term = np.full(pts.shape[0], c * scale ** (self.dim / 2.0))
            for j, (r, e) in enumerate(zip(idx.translation, idx.kind)):
                term *= self.family.profile(e, scale * pts[:, j] - r)
            total += term
        return total

    def _offset(self, pts: np.ndarray) -> np.ndarray:
        if isinstance(self.offset, ScalarField):
            return self.offset.evaluate(pts)
        return np.full(pts.shape[0], float(self.offset))

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self._offset(pts) + self._series(pts)

    def describe(self):
        return {"type": "wavelet_series", "family": self.family.name, "terms": len(self.indices)}


@dataclass(frozen=True, eq=False)
class ExpansionField(DiffusivityField):
    """baseline + Σ c_k ψ_k on a full basis, evaluated through the sparse design."""

    coeffs: CoeffVector
    baseline: Union[float, ScalarField] = 1.0
    f_min: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.coeffs.basis.dim

    def evaluate(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        base = (
            self.baseline.evaluate(pts)
            if isinstance(self.baseline, ScalarField)
            else np.full(pts.shape[0], float(self.baseline))
        )
        return base + synthesize(self.coeffs, pts)

    def describe(self):
        basis = self.coeffs.basis
        return {
            "type": "wavelet_expansion",
            "family": basis.family.name,
            "J0": basis.J0,
            "J": basis.J,
        }


def check_boundary_value(
    basis: BasisSpec,
    f: ScalarField,
    baseline: Union[float, ScalarField] = 1.0,
    points_per_unit: Optional[float] = None,
) -> float:
    """Max |f − baseline| over quadrature nodes of O outside O_0.

    Raises:
        MembershipError: If the deviation exceeds the membership tolerance
    """
    domain = basis.regions.domain
    if points_per_unit is None:
        points_per_unit = 2.0 ** (basis.J0 + DEFAULT_QUADRATURE_EXTRA_LEVELS)
    lo, hi = domain.bounding_box
    nodes, _, _ = midpoint_grid(lo, hi, points_per_unit)
    outer = nodes[domain.contains(nodes) & ~basis.regions.in_O0(nodes)]
    if outer.shape[0] == 0:
        return 0.0
    base = baseline.evaluate(outer) if isinstance(baseline, ScalarField) else float(baseline)
    deviation = float(np.max(np.abs(f.evaluate(outer) - base)))
    if deviation > MEMBERSHIP_TOLERANCE:
        raise MembershipError(
            f"f deviates from its boundary value by {deviation:.3e} outside O_0",
            bound="boundary_value",
            value=deviation,
            limit=MEMBERSHIP_TOLERANCE,
        )
    return deviation


def bar_project(
    basis: BasisSpec,
    f: ScalarField,
    baseline: Union[float, ScalarField] = 1.0,
    points_per_unit: Optional[float] = None,
) -> ExpansionField:
    """P̄_J f = g + P_J[f − g], with g ≡ 1 unless a known baseline is given.

    Raises:
        MembershipError: If f differs from the baseline on O \\ O_0 beyond 1e-8
    """
    check_boundary_value(basis, f, baseline)

    def difference(points):
        base = baseline.evaluate(points) if isinstance(baseline, ScalarField) else float(baseline)
        return f.evaluate(points) - base

    coeffs = project(basis, difference, points_per_unit)
    return ExpansionField(coeffs=coeffs, baseline=baseline, f_min=getattr(f, "f_min", None))

