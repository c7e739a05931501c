"""Daubechies scaling function and wavelet tables.

Filters come from PyWavelets. Values of φ and ψ are computed exactly at
dyadic points: φ at the integers is the eigenvector of the two-scale matrix
for eigenvalue one, normalized by the partition of unity, and every further
dyadic level follows from φ(x) = √2 Σ h_k φ(2x − k). Between table points
values are linearly interpolated.
"""

from dataclasses import dataclass, field

import numpy as np
import pywt

from ..utils.constants import DEFAULT_TABLE_RESOLUTION, MAX_DAUBECHIES_ORDER, MIN_DAUBECHIES_ORDER
from ..utils.errors import BasisError
from ..utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class WaveletFamily:
    """Tabulated Daubechies family with ``order`` vanishing moments.

    Attributes:
        order: Number of vanishing moments p (filter length 2p)
        filter: Low-pass reconstruction filter h, sums to √2
        highpass: High-pass reconstruction filter g
        table_resolution: Dyadic depth L of the tables (spacing 2^-L)
        phi_table: φ at k·2^-L, k = 0 .. (2p−1)·2^L
        psi_table: ψ at the same points
    """

    order: int
    filter: np.ndarray
    highpass: np.ndarray
    table_resolution: int
    phi_table: np.ndarray = field(repr=False)
    psi_table: np.ndarray = field(repr=False)

    @property
    def name(self) -> str:
        return f"db{self.order}"

    @property
    def support_length(self) -> int:
        """Both φ and ψ are supported on [0, 2p − 1]."""
        return 2 * self.order - 1

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.phi_table.size) / 2.0**self.table_resolution

    @property
    def phi_sup(self) -> float:
        return float(np.max(np.abs(self.phi_table)))

    @property
    def psi_sup(self) -> float:
        return float(np.max(np.abs(self.psi_table)))

    def phi(self, x) -> np.ndarray:
        return np.interp(x, self.grid, self.phi_table, left=0.0, right=0.0)

    def psi(self, x) -> np.ndarray:
        return np.interp(x, self.grid, self.psi_table, left=0.0, right=0.0)

    def profile(self, kind: int, x) -> np.ndarray:
        """φ for kind 0, ψ for kind 1."""
        return self.psi(x) if kind else self.phi(x)

    def sup(self, kind: int) -> float:
        return self.psi_sup if kind else self.phi_sup

    def two_scale_residual(self) -> float:
        """max |φ(x) − √2 Σ h_k φ(2x − k)| over the table points."""
        L = self.table_resolution
        n = self.phi_table.size
        i = np.arange(n)
        total = np.zeros(n)
        for k, h in enumerate(self.filter):
            src = 2 * i - k * 2**L
            ok = (src >= 0) & (src < n)
            total[ok] += np.sqrt(2.0) * h * self.phi_table[src[ok]]
        return float(np.max(np.abs(self.phi_table - total)))


def _refine(prev: np.ndarray, coeffs: np.ndarray, level: int) -> np.ndarray:
    """One dyadic refinement: values at spacing 2^-level from spacing 2^-(level-1)."""
    support = len(coeffs) - 1
    out = np.zeros(support * 2**level + 1)
    shift = 2 ** (level - 1)
    idx = np.arange(out.size)
    for k, c in enumerate(coeffs):
        src = idx - k * shift
        ok = (src >= 0) & (src < prev.size)
        out[ok] += c * prev[src[ok]]
    return out


def build_family(p: int, table_resolution: int = DEFAULT_TABLE_RESOLUTION) -> WaveletFamily:
    """Tabulate the Daubechies family with ``p`` vanishing moments.

    Args:
        p: Daubechies order (2..10)
        table_resolution: Dyadic depth of the tables

    Returns:
        WaveletFamily with exact dyadic tables for φ and ψ

    Raises:
        BasisError: For unsupported orders or a malformed filter

    Example:
        >>> family = build_family(2)
        >>> family.support_length
        3
    """
    if not MIN_DAUBECHIES_ORDER <= p <= MAX_DAUBECHIES_ORDER:
        raise BasisError(
            f"Unsupported Daubechies order {p}; "
            f"expected {MIN_DAUBECHIES_ORDER}..{MAX_DAUBECHIES_ORDER}"
        )
    if table_resolution < 1:
        raise BasisError(f"table_resolution must be positive: {table_resolution}")

    wavelet = pywt.Wavelet(f"db{p}")
    h = np.asarray(wavelet.rec_lo, dtype=float)
    g = np.asarray(wavelet.rec_hi, dtype=float)
    if abs(h.sum() - np.sqrt(2.0)) > 1e-12:
        raise BasisError(f"db{p} low-pass filter sums to {h.sum()}, expected sqrt(2)")

    c = np.sqrt(2.0) * h
    n = c.size
    # φ at the integers 0..n-1: φ(j) = Σ_k c_k φ(2j − k)
    matrix = np.zeros((n, n))
    for j in range(n):
        for i in range(n):
            if 0 <= 2 * j - i < n:
                matrix[j, i] = c[2 * j - i]
    eigvals, eigvecs = np.linalg.eig(matrix)
    vec = np.real(eigvecs[:, np.argmin(np.abs(eigvals - 1.0))])
    phi = vec / vec.sum()

    for level in range(1, table_resolution):
        phi = _refine(phi, c, level)
    psi = _refine(phi, np.sqrt(2.0) * g, table_resolution)
    phi = _refine(phi, c, table_resolution)

    family = WaveletFamily(
        order=p,
        filter=h,
        highpass=g,
        table_resolution=table_resolution,
        phi_table=phi,
        psi_table=psi,
    )
    logger.debug(f"Built {family.name} tables at depth {table_resolution}")
    return family


def default_order(s: float) -> int:
    """Daubechies order max(4, ⌊s⌋ − 1), capped at the largest supported order."""
    return int(min(MAX_DAUBECHIES_ORDER, max(4, int(np.floor(s)) - 1)))
