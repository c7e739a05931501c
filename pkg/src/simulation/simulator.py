"""Projected Euler simulation of the reflected diffusion.

Each substep applies X <- proj_O(X + b(X) dt + sqrt(2 f(X) dt) xi). Paths
are advanced together as one (n_paths, d) array, but every path draws its
noise from its own Philox stream keyed by (seed, PATH_STREAM, path index),
so a path does not depend on how many others run alongside it.
"""

from typing import List, Tuple

import numpy as np

from ..geometry.domain import DomainSpec
from ..utils.constants import RNG_BLOCK_INTERVALS
from ..utils.errors import NumericalError
from ..utils.logger import get_logger
from ..utils.rng import make_rng
from .config import DriftMode, ObservationSet, SdeConfig

logger = get_logger(__name__)

PATH_STREAM = 0
TRANSITION_STREAM = 1


def initial_draw(domain: DomainSpec, rng: np.random.Generator) -> np.ndarray:
    """One uniform point in O (rejection sampling for balls)."""
    points, _ = domain.sample_uniform(1, rng)
    return points[0]


def drift_at(config: SdeConfig, points: np.ndarray) -> np.ndarray:
    """Drift b at points of shape (n, d)."""
    if config.drift_mode is DriftMode.GRADIENT:
        return config.f.gradient(points)
    if config.drift_mode is DriftMode.GENERIC:
        return np.asarray(config.drift(points), dtype=float)
    return np.zeros_like(points)


def euler_substep(
    config: SdeConfig, X: np.ndarray, noise: np.ndarray, dt: float
) -> Tuple[np.ndarray, np.ndarray]:
    """One projected Euler substep.

    Args:
        config: Simulation settings
        X: Current states, shape (n, d)
        noise: Standard normal draws, shape (n, d)
        dt: Substep length

    Returns:
        Tuple of (projected states, mask of rows whose free step touched ∂O)

    Raises:
        NumericalError: If f is non-positive at a current state
    """
    values = config.f.evaluate(X)
    bad = values <= 0
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raise NumericalError(
            f"Diffusivity is non-positive (f={values[row]:.3e}) at {X[row].tolist()}"
        )
    free = X + drift_at(config, X) * dt + np.sqrt(2.0 * values * dt)[:, None] * noise
    domain = config.regions.domain
    touched = domain.signed_distance(free) <= 0.0
    return domain.project(free), touched


def simulate_paths(
    config: SdeConfig, n_paths: int = 1, first_path: int = 0
) -> List[ObservationSet]:
    """Simulate independent trajectories observed every D.

    Path k uses the stream (seed, PATH_STREAM, first_path + k): X_0 is drawn
    first, then standard normals in blocks of RNG_BLOCK_INTERVALS intervals.

    Args:
        config: Simulation settings
        n_paths: Number of trajectories
        first_path: Index of the first trajectory

    Returns:
        One ObservationSet per trajectory

    Raises:
        NumericalError: If f is non-positive anywhere on a path
    """
    d, N, m = config.dim, config.N, config.substep_count
    dt = config.dt
    domain = config.regions.domain
    rngs = [make_rng(config.seed, PATH_STREAM, first_path + k) for k in range(n_paths)]
    X = np.stack([initial_draw(domain, rng) for rng in rngs])
    points = np.empty((n_paths, N + 1, d))
    points[:, 0] = X
    logger.debug(f"Simulating {n_paths} path(s): N={N}, D={config.D:g}, substeps={m}")

    for block_start in range(0, N, RNG_BLOCK_INTERVALS):
        block = min(RNG_BLOCK_INTERVALS, N - block_start)
        noise = np.stack([rng.standard_normal((block, m, d)) for rng in rngs])
        for i in range(block):
            for k in range(m):
                try:
                    X, _ = euler_substep(config, X, noise[:, i, k], dt)
                except NumericalError as e:
                    raise NumericalError(
                        f"{e} (interval {block_start + i + 1}, substep {k + 1})"
                    ) from e
            points[:, block_start + i + 1] = X

    metadata = {"substeps": m, "drift_mode": config.drift_mode.value}
    return [
        ObservationSet(
            points=points[k],
            D=config.D,
            seed=config.seed,
            domain=domain,
            f_truth_id=config.truth_id,
            metadata={**metadata, "path_index": first_path + k},
        )
        for k in range(n_paths)
    ]


def sample_path(config: SdeConfig) -> ObservationSet:
    """X_0 ~ uniform(O), then N projected-Euler intervals of length D."""
    return simulate_paths(config, n_paths=1)[0]


def simulate_transitions(
    config: SdeConfig, starts: np.ndarray, stream: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Advance each start by one interval D.

    Args:
        config: Simulation settings (N is ignored)
        starts: Starting points, shape (n, d)
        stream: Stream index; noise comes from (seed, TRANSITION_STREAM, stream)

    Returns:
        Tuple of (end points (n, d), boolean mask of transitions touching ∂O)
    """
    X = np.array(starts, dtype=float).reshape(-1, config.dim)
    m = config.substep_count
    rng = make_rng(config.seed, TRANSITION_STREAM, stream)
    noise = rng.standard_normal((m, X.shape[0], config.dim))
    hits = np.zeros(X.shape[0], dtype=bool)
    for k in range(m):
        X, touched = euler_substep(config, X, noise[k], config.dt)
        hits |= touched
    return X, hits


def boundary_hit_frequency(
    config: SdeConfig,
    start_region: DomainSpec,
    n_replicates: int = 10_000,
    stream: int = 0,
) -> float:
    """Fraction of length-D intervals started uniformly in start_region that touch ∂O.

    Raises:
        ValueError: If start_region does not lie in the domain
    """
    rng = make_rng(config.seed, TRANSITION_STREAM, stream, 1)
    starts, _ = start_region.sample_uniform(n_replicates, rng)
    if not np.all(config.regions.domain.contains(starts)):
        raise ValueError("start_region must lie inside the domain")
    _, hits = simulate_transitions(config, starts, stream)
    frequency = float(np.mean(hits))
    logger.debug(f"Boundary hit frequency at D={config.D:g}: {frequency:.4f}")
    return frequency


def hitting_bound(d: int, delta: float, f_sup: float, D: float) -> float:
    """2d exp(−δ² / (20 d ‖f‖∞ D)), the bound on hitting ∂O from O_0^δ within D.

    Example:
        >>> round(hitting_bound(1, 0.1, 1.0, 0.0005), 4)
        0.7358
    """
    if delta <= 0 or f_sup <= 0 or D <= 0:
        raise ValueError(f"delta, f_sup and D must be positive: {delta}, {f_sup}, {D}")
    return float(2 * d * np.exp(-(delta**2) / (20.0 * d * f_sup * D)))


def squared_increments(starts: np.ndarray, ends: np.ndarray, D: float) -> np.ndarray:
    """|end − start|² / (2dD) row by row."""
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    d = starts.shape[-1]
    return np.sum((ends - starts) ** 2, axis=-1) / (2.0 * d * D)


def increments_Y(obs: ObservationSet) -> np.ndarray:
    """Y_i = |X_{iD} − X_{(i−1)D}|² / (2dD), i = 1..N.

    Example:
        >>> obs = ObservationSet(points=np.array([[0.30], [0.32]]), D=0.01)
        >>> float(np.round(increments_Y(obs)[0], 12))
        0.02
    """
    if obs.N < 1:
        raise ValueError("increments_Y needs at least two observations")
    return squared_increments(obs.starts, obs.ends, obs.D)

