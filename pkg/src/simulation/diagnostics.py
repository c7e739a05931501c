"""Path statistics: occupation histograms, increment moments, batch-means ESS."""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..geometry.domain import DomainSpec, Shape
from ..utils.logger import get_logger
from ..utils.numerics import midpoint_grid
from .config import ObservationSet

logger = get_logger(__name__)

UNIFORMITY_Z = 4.0


def batch_means_variance(series: np.ndarray) -> Tuple[float, int]:
    """Long-run variance of a stationary series by non-overlapping batch means.

    Returns:
        Tuple of (long-run variance estimate, number of batches)
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    size = max(1, int(np.floor(np.sqrt(n))))
    n_batches = n // size
    if n_batches < 2:
        return float(np.var(x)), n_batches
    means = x[: n_batches * size].reshape(n_batches, size).mean(axis=1)
    return float(size * np.var(means, ddof=1)), n_batches


def effective_sample_size(series: np.ndarray) -> float:
    """n · Var(x) / σ²_batch-means, clipped to [1, n].

    Example:
        >>> effective_sample_size(np.arange(4.0) % 2)
        4.0
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 4:
        return float(n)
    variance = float(np.var(x, ddof=1))
    if variance == 0.0:
        return float(n)
    long_run, _ = batch_means_variance(x)
    if long_run <= 0.0:
        return float(n)
    return float(np.clip(n * variance / long_run, 1.0, n))


@dataclass(frozen=True, eq=False)
class PathDiagnostics:
    """Summary statistics of an observed path.

    Attributes:
        histogram: Normalized occupation histogram (sums to 1)
        edges: Bin edges per axis
        increment_mean: Per-coordinate mean of X_{iD} − X_{(i−1)D}
        increment_var: Per-coordinate variance of the increments
        boundary_hits: Number of intervals touching ∂O, when tracked
        n_effective: Batch-means effective sample size (min over coordinates)
    """

    histogram: np.ndarray
    edges: Tuple[np.ndarray, ...]
    increment_mean: np.ndarray
    increment_var: np.ndarray
    boundary_hits: Optional[int] = None
    n_effective: float = 1.0

    def __post_init__(self):
        total = float(np.sum(self.histogram))
        if not np.isclose(total, 1.0, atol=1e-12):
            raise ValueError(f"Histogram mass must sum to 1, got {total}")


def occupation_histogram(
    obs: ObservationSet, bins: int, domain: Optional[DomainSpec] = None
) -> PathDiagnostics:
    """Normalized histogram of the observed states over the domain's bounding box.

    Args:
        obs: Observations
        bins: Bins per axis (at least 1)
        domain: Domain whose bounding box sets the range; obs.domain by default

    Returns:
        PathDiagnostics with increment moments and effective sample size
    """
    if bins < 1:
        raise ValueError(f"bins must be at least 1: {bins}")
    domain = domain if domain is not None else obs.domain
    if domain is not None:
        lo, hi = domain.bounding_box
    else:
        lo, hi = obs.points.min(axis=0), obs.points.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
    counts, edges = np.histogramdd(obs.points, bins=bins, range=list(zip(lo, hi)))
    histogram = counts / counts.sum()

    if obs.N >= 1:
        steps = obs.ends - obs.starts
        inc_mean, inc_var = steps.mean(axis=0), steps.var(axis=0)
    else:
        inc_mean = inc_var = np.zeros(obs.dim)
    n_eff = min(effective_sample_size(obs.points[:, j]) for j in range(obs.dim))
    return PathDiagnostics(
        histogram=histogram,
        edges=tuple(edges),
        increment_mean=inc_mean,
        increment_var=inc_var,
        n_effective=n_eff,
    )


def uniform_bin_mass(domain: DomainSpec, edges: Tuple[np.ndarray, ...]) -> np.ndarray:
    """Mass of each histogram cell under the uniform law on O.

    Exact for hyperrectangles; balls use a fine midpoint grid per cell.
    """
    widths = [np.diff(e) for e in edges]
    cell_volume = np.prod(np.meshgrid(*widths, indexing="ij"), axis=0)
    if domain.shape is Shape.HYPERRECTANGLE:
        return cell_volume / domain.volume
    lo = np.array([e[0] for e in edges])
    hi = np.array([e[-1] for e in edges])
    shape = tuple(len(e) - 1 for e in edges)
    nodes, cell, _ = midpoint_grid(lo, hi, 32 * max(shape) / float(np.min(hi - lo)))
    inside = domain.contains(nodes)
    index = tuple(
        np.clip(np.searchsorted(e, nodes[:, j], side="right") - 1, 0, len(e) - 2)
        for j, e in enumerate(edges)
    )
    mass = np.zeros(shape)
    np.add.at(mass, index, inside * cell)
    return mass / mass.sum()


@dataclass(frozen=True)
class UniformityReport:
    """Largest standardized deviation of the occupation histogram from uniform."""

    max_deviation: float
    max_z: float
    n_effective: float
    passed: bool


def uniformity_check(
    diagnostics: PathDiagnostics, domain: DomainSpec, z: float = UNIFORMITY_Z
) -> UniformityReport:
    """Compare each bin with its uniform mass p using sqrt(p(1−p)/N_eff) errors."""
    expected = uniform_bin_mass(domain, diagnostics.edges)
    deviation = np.abs(diagnostics.histogram - expected)
    se = np.sqrt(expected * (1.0 - expected) / diagnostics.n_effective)
    live = se > 0
    z_scores = np.where(live, deviation / np.where(live, se, 1.0), 0.0)
    max_z = float(np.max(z_scores))
    return UniformityReport(
        max_deviation=float(np.max(deviation)),
        max_z=max_z,
        n_effective=diagnostics.n_effective,
        passed=max_z <= z,
    )


def stationarity_check(obs: ObservationSet, domain: DomainSpec, z: float = UNIFORMITY_Z) -> List[float]:
    """Per-coordinate |mean − uniform mean| in batch-means standard errors.

    Every entry should be at most z for a stationary path started uniformly.
    """
    centroid = domain.centroid
    scores = []
    for j in range(obs.dim):
        long_run, _ = batch_means_variance(obs.points[:, j])
        se = np.sqrt(max(long_run, 1e-300) / obs.points.shape[0])
        scores.append(float(abs(obs.points[:, j].mean() - centroid[j]) / se))
    if max(scores) > z:
        logger.warning(f"Stationarity check exceeds {z} standard errors: {scores}")
    return scores
