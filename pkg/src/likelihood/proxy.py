"""Gaussian proxy transition density of the drift-free Euler step.

q_{f,D}(x, y) = (4πD f(x))^{−d/2} exp(−|y − x|² / (4D f(x)))

The exact transition density of the reflected diffusion has no closed
form; every likelihood and KL figure produced here concerns q.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from ..geometry.domain import DomainSpec
from ..geometry.regions import NestedRegions
from ..models.fields import DiffusivityField, ScalarField
from ..simulation.config import DriftMode, ObservationSet, SdeConfig
from ..simulation.simulator import simulate_paths, simulate_transitions
from ..utils.errors import NumericalError
from ..utils.logger import get_logger
from ..utils.numerics import central_partial, midpoint_grid
from ..utils.rng import make_rng

logger = get_logger(__name__)

KL_START_STREAM = 7
KL_PATH_OFFSET = 1_000_000


@dataclass(frozen=True, eq=False)
class ProxyModel:
    """The proxy density of a diffusivity at sampling interval D."""

    f: ScalarField
    D: float

    def __post_init__(self):
        if self.D <= 0:
            raise ValueError(f"Sampling interval must be positive: {self.D}")

    @property
    def dim(self) -> int:
        return self.f.dim

    def log_density(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """log q at row-paired points x, y of shape (n, d).

        Raises:
            NumericalError: If f(x) ≤ 0 for some row
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        values = self.f.evaluate(x)
        if np.any(values <= 0):
            row = int(np.flatnonzero(values <= 0)[0])
            raise NumericalError(f"Proxy density needs f(x) > 0; f={values[row]:.3e} at {x[row]}")
        d = x.shape[1]
        squared = np.sum((y - x) ** 2, axis=1)
        return -0.5 * d * np.log(4.0 * np.pi * self.D * values) - squared / (4.0 * self.D * values)


def log_q(model: ProxyModel, x, y) -> float:
    """−(d/2) log(4πD f(x)) − |y − x|² / (4D f(x)) for a single pair.

    Example:
        >>> from src.models.fields import ConstantField
        >>> round(log_q(ProxyModel(ConstantField(1.0, 1), 0.01), [0.5], [0.5]), 5)
        1.03726
    """
    x = np.asarray(x, dtype=float).reshape(1, -1)
    y = np.asarray(y, dtype=float).reshape(1, -1)
    return float(model.log_density(x, y)[0])


def _pair_terms(
    model: ProxyModel, obs: ObservationSet, regions: Optional[NestedRegions], restrict_interior: bool
) -> np.ndarray:
    terms = model.log_density(obs.starts, obs.ends)
    if restrict_interior:
        if regions is None:
            raise ValueError("restrict_interior needs the nested regions")
        terms = np.where(regions.in_O0_delta(obs.starts), terms, 0.0)
    return terms


def proxy_loglik(
    model: ProxyModel,
    obs: ObservationSet,
    regions: Optional[NestedRegions] = None,
    restrict_interior: bool = True,
) -> float:
    """Σ_i log q(X_{(i−1)D}, X_{iD}), optionally only over starts in O_0^δ."""
    return float(np.sum(_pair_terms(model, obs, regions, restrict_interior)))


def loglik_ratio(
    f: ScalarField,
    f0: ScalarField,
    D: float,
    obs: ObservationSet,
    regions: NestedRegions,
) -> float:
    """Interior-restricted Σ_i log(q_f / q_{f0})(X_{(i−1)D}, X_{iD}).

    Summed pairwise so that f = f0 gives exactly 0 and swapping the
    arguments flips the sign.
    """
    terms = _pair_terms(ProxyModel(f, D), obs, regions, True) - _pair_terms(
        ProxyModel(f0, D), obs, regions, True
    )
    return float(np.sum(terms))


def ratio_decomposition(f: ScalarField, f0: ScalarField, D: float, x, y) -> np.ndarray:
    """(d/2) log(f0/f)(x) − (1/(4D)) (1/f − 1/f0)(x) |y − x|², rowwise."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    fx, f0x = f.evaluate(x), f0.evaluate(x)
    squared = np.sum((y - x) ** 2, axis=1)
    return 0.5 * x.shape[1] * np.log(f0x / fx) - (1.0 / fx - 1.0 / f0x) * squared / (4.0 * D)


@dataclass(frozen=True)
class KLEstimate:
    """Monte Carlo moments of the proxy log-likelihood ratio under f0.

    Attributes:
        mean: Per-transition mean of log(q_{f0}/q_f)
        mean_stderr: Standard error of ``mean``
        variance: Variance of Σ_{i≤N} log(q_{f0}/q_f) along a path
        variance_stderr: Normal-theory standard error of ``variance``
        N: Path length used for the variance
        n_mc: Number of one-interval transitions used for the mean
    """

    mean: float
    mean_stderr: float
    variance: float
    variance_stderr: float
    N: int
    n_mc: int


def _ratio_terms(f0, f, D, regions, starts, ends) -> np.ndarray:
    terms = ProxyModel(f0, D).log_density(starts, ends) - ProxyModel(f, D).log_density(starts, ends)
    return np.where(regions.in_O0_delta(starts), terms, 0.0)


def mc_transition_kl(
    f0: DiffusivityField,
    f: ScalarField,
    D: float,
    n_mc: int,
    seed: int,
    regions: NestedRegions,
    N: int = 1,
    n_paths: int = 200,
    drift_mode: DriftMode = DriftMode.GRADIENT,
    substeps: Optional[int] = None,
) -> KLEstimate:
    """Monte Carlo E_{f0}[log q_{f0}/q_f] per transition and Var_{f0} of the N-sum.

    Transitions start from the stationary (uniform) law and are simulated
    under f0; the path variance uses ``n_paths`` independent paths of length N.

    Args:
        f0: Data-generating diffusivity
        f: Alternative diffusivity
        D: Sampling interval
        n_mc: Number of one-interval transitions for the mean
        seed: Seed
        regions: Nested regions (interior restriction)
        N: Path length for the variance of the sum
        n_paths: Number of paths for the variance
        drift_mode: Drift used when simulating under f0
        substeps: Euler substeps per interval
    """
    config = SdeConfig(
        f=f0, regions=regions, D=D, N=N, seed=seed, drift_mode=drift_mode, substeps=substeps
    )
    starts, _ = regions.domain.sample_uniform(n_mc, make_rng(seed, KL_START_STREAM))
    ends, _ = simulate_transitions(config, starts, stream=KL_START_STREAM)
    per_transition = _ratio_terms(f0, f, D, regions, starts, ends)
    mean = float(np.mean(per_transition))
    mean_se = float(np.std(per_transition, ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else 0.0

    paths = simulate_paths(config, n_paths=n_paths, first_path=KL_PATH_OFFSET)
    sums = np.array([np.sum(_ratio_terms(f0, f, D, regions, p.starts, p.ends)) for p in paths])
    variance = float(np.var(sums, ddof=1)) if n_paths > 1 else 0.0
    variance_se = variance * np.sqrt(2.0 / (n_paths - 1)) if n_paths > 1 else 0.0
    logger.debug(f"KL at D={D:g}, N={N}: mean={mean:.3e}±{mean_se:.1e}, var={variance:.3e}")
    return KLEstimate(
        mean=mean,
        mean_stderr=mean_se,
        variance=variance,
        variance_stderr=float(variance_se),
        N=N,
        n_mc=n_mc,
    )


def neighborhood_report(
    f: ScalarField,
    f0: ScalarField,
    domain: DomainSpec,
    points_per_unit: float = 64.0,
    orders: Sequence[int] = (1, 2, 3),
) -> Dict[str, float]:
    """Raw distances between f and f0: sup, L² and sup of partial derivatives.

    No pass/fail is attached; the neighborhood constants are unknown.
    """
    lo, hi = domain.bounding_box
    nodes, cell, _ = midpoint_grid(lo, hi, points_per_unit)
    nodes = nodes[domain.contains(nodes)]
    diff = f.evaluate(nodes) - f0.evaluate(nodes)
    report = {
        "sup": float(np.max(np.abs(diff))),
        "l2": float(np.sqrt(np.sum(diff**2) * cell)),
    }

    def difference(points):
        return f.evaluate(points) - f0.evaluate(points)

    for order in orders:
        report[f"sup_d{order}"] = float(
            max(
                np.max(np.abs(central_partial(difference, nodes, axis, order)))
                for axis in range(domain.dim)
            )
        )
    return report
