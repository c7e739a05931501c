"""Pseudo-posterior sampling with preconditioned Crank-Nicolson proposals.

The target is the Gaussian prior on w reweighted by the interior-restricted
proxy likelihood of f = Φ(χ · w/N^{d/(4s+2d)} + Φ⁻¹(g)). Because the pCN
proposal is reversible for the prior, the acceptance ratio involves the
likelihood only.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..geometry.cutoff import CutoffField
from ..geometry.domain import DomainSpec
from ..models.fields import ScalarField
from ..models.link import LinkedField, compose_field, link_phi, link_phi_inverse
from ..simulation.config import ObservationSet
from ..simulation.diagnostics import effective_sample_size
from ..utils.constants import (
    DEFAULT_QUADRATURE_EXTRA_LEVELS,
    PCN_ADAPT_WINDOW,
    PCN_TARGET_ACCEPTANCE,
    PCN_WARN_ACCEPTANCE,
)
from ..utils.logger import get_logger
from ..utils.numerics import midpoint_grid
from ..utils.rng import make_rng
from .priors import GaussianPrior, rescale_factor

logger = get_logger(__name__)

CHAIN_STREAM = 3


class ProxyPosterior:
    """Log pseudo-likelihood Λ(w) with the per-data quantities cached.

    Attributes:
        prior: Gaussian prior of the unrescaled V
        cutoff: Cutoff χ
        f_min: Link lower bound
        N: Sample size entering the rescaling
        divisor: N^{d/(4s+2d)}
    """

    def __init__(
        self,
        prior: GaussianPrior,
        obs: ObservationSet,
        cutoff: CutoffField,
        f_min: float,
        baseline: Optional[Union[float, ScalarField]] = None,
        N: Optional[int] = None,
    ):
        """Initialize the target.

        Args:
            prior: Prior of V
            obs: Observations (a single state means no data)
            cutoff: Cutoff χ built on the observation regions
            f_min: Link lower bound
            baseline: Known boundary function g; 1 when None
            N: Sample size for the rescaling; obs.N by default (at least 1)
        """
        self.prior = prior
        self.obs = obs
        self.cutoff = cutoff
        self.f_min = f_min
        self.regions = cutoff.regions
        self.dim = self.regions.domain.dim
        self.N = max(1, obs.N if N is None else N)
        self.divisor = rescale_factor(self.N, prior.s, self.dim)
        self.baseline = baseline

        starts = obs.starts
        active = self.regions.in_O0_delta(starts) if starts.shape[0] else np.zeros(0, dtype=bool)
        self._starts = starts[active]
        self._squared = np.sum((obs.ends[active] - self._starts) ** 2, axis=1)
        self._chi = self.cutoff.evaluate(self._starts) if self._starts.shape[0] else np.zeros(0)
        self._offset = self.baseline_exponent(self._starts)
        self._evaluate = prior.evaluator(self._starts) if self._starts.shape[0] else None
        logger.debug(f"Pseudo-posterior with {self._starts.shape[0]} active transitions")

    def baseline_exponent(self, points: np.ndarray) -> np.ndarray:
        if self.baseline is None or points.shape[0] == 0:
            return np.zeros(points.shape[0])
        if isinstance(self.baseline, ScalarField):
            return link_phi_inverse(self.baseline.evaluate(points), self.f_min)
        return np.full(points.shape[0], float(link_phi_inverse(float(self.baseline), self.f_min)))

    @property
    def active_transitions(self) -> int:
        return int(self._starts.shape[0])

    def loglik(self, w: np.ndarray) -> float:
        """Σ over active transitions of log q_f, with f = Φ(χ w/divisor + Φ⁻¹(g))."""
        if self._evaluate is None:
            return 0.0
        exponent = self._chi * self._evaluate(w) / self.divisor + self._offset
        f = link_phi(exponent, self.f_min)
        D = self.obs.D
        return float(
            np.sum(-0.5 * self.dim * np.log(4.0 * np.pi * D * f) - self._squared / (4.0 * D * f))
        )

    def field(self, w: np.ndarray) -> LinkedField:
        """f represented by w."""
        baseline = self.baseline if self.baseline is not None else 1.0
        return compose_field(self.prior.field(w / self.divisor), self.cutoff, self.f_min, baseline)


@dataclass(frozen=True, eq=False)
class ChainState:
    """Current w with its cached log pseudo-likelihood."""

    w: np.ndarray
    loglik: float

    def verify(self, target: ProxyPosterior, rtol: float = 1e-10) -> bool:
        """Recompute Λ(w) and compare with the cached value."""
        return bool(np.isclose(target.loglik(self.w), self.loglik, rtol=rtol, atol=1e-10))


def pcn_step(
    state: ChainState, beta: float, target: ProxyPosterior, rng: np.random.Generator
) -> Tuple[ChainState, bool]:
    """w' = sqrt(1 − β²) w + β ξ, accepted with probability min(1, exp(Λ(w') − Λ(w))).

    Raises:
        ValueError: If β is outside (0, 1]
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1]: {beta}")
    proposal = np.sqrt(1.0 - beta**2) * state.w + beta * target.prior.draw(rng)
    loglik = target.loglik(proposal)
    if np.log(rng.random()) < loglik - state.loglik:
        return ChainState(w=proposal, loglik=loglik), True
    return state, False


class EvaluationGrid:
    """Midpoint nodes of O where posterior fields are tabulated."""

    def __init__(self, domain: DomainSpec, points_per_unit: float):
        lo, hi = domain.bounding_box
        nodes, cell, _ = midpoint_grid(lo, hi, points_per_unit)
        self.domain = domain
        self.nodes = nodes[domain.contains(nodes)]
        self.cell = cell

    def l2(self, values: np.ndarray, reference: np.ndarray) -> np.ndarray:
        """L² distances of rows of ``values`` (or one vector) to ``reference``."""
        return np.sqrt(np.sum((values - reference) ** 2, axis=-1) * self.cell)

    def to_frame(self, values: np.ndarray, column: str = "f_hat") -> pd.DataFrame:
        frame = pd.DataFrame(self.nodes, columns=[f"x{j + 1}" for j in range(self.domain.dim)])
        frame[column] = values
        return frame


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Kept states of one or more chains and their diagnostics.

    Attributes:
        grid: Evaluation grid
        kept_values: f of each kept state on the grid, shape (n_kept, n_nodes)
        acceptance_rate: Fraction of accepted proposals after burn-in
        beta: Step size used after burn-in
        trace: Per-iteration ``iter,loglik,accept,l2_to_truth`` (plus ``chain``)
        ess: Effective sample size of the kept log-likelihood trace
    """

    grid: EvaluationGrid
    kept_values: np.ndarray
    acceptance_rate: float
    beta: float
    trace: pd.DataFrame
    ess: float
    kept_loglik: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError(f"Acceptance rate must lie in [0, 1]: {self.acceptance_rate}")

    @property
    def n_kept(self) -> int:
        return int(self.kept_values.shape[0])

    @property
    def mean_values(self) -> np.ndarray:
        """Posterior mean of f on the grid."""
        return self.kept_values.mean(axis=0)

    def mean_l2(self, f0: Union[ScalarField, float]) -> float:
        return float(self.grid.l2(self.mean_values, _on_grid(f0, self.grid)))

    def mean_frame(self) -> pd.DataFrame:
        return self.grid.to_frame(self.mean_values)

    def write_trace(self, path: Union[str, Path]) -> None:
        self.trace.to_csv(path, index=False, float_format="%.10g")
        logger.info(f"Wrote chain trace ({len(self.trace)} rows) to {path}")


def _on_grid(f: Union[ScalarField, float], grid: EvaluationGrid) -> np.ndarray:
    if isinstance(f, ScalarField):
        return f.evaluate(grid.nodes)
    return np.full(grid.nodes.shape[0], float(f))


class _GridTabulator:
    """f on the evaluation grid for a given w, through the prior's linear evaluator."""

    def __init__(self, target: ProxyPosterior, grid: EvaluationGrid):
        self.target = target
        self.evaluate = target.prior.evaluator(grid.nodes)
        self.chi = target.cutoff.evaluate(grid.nodes)
        self.offset = target.baseline_exponent(grid.nodes)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        exponent = self.chi * self.evaluate(w) / self.target.divisor + self.offset
        return link_phi(exponent, self.target.f_min)


def _adapt(beta: float, rate: float) -> float:
    low, high = PCN_TARGET_ACCEPTANCE
    if rate > high:
        return min(1.0, beta * 1.2)
    if rate < low:
        return beta * 0.8
    return beta


def run_chain(
    target: ProxyPosterior,
    iters: int,
    beta: float,
    burn_in: int,
    thin: int = 1,
    seed: int = 0,
    chain_index: int = 0,
    f0: Optional[Union[ScalarField, float]] = None,
    points_per_unit: Optional[float] = None,
    adapt: bool = True,
) -> PosteriorSummary:
    """Run one pCN chain.

    During burn-in β is multiplied by 1.2 (acceptance above 0.4) or 0.8
    (below 0.15) every PCN_ADAPT_WINDOW iterations; it is frozen afterwards.

    Args:
        target: Pseudo-posterior
        iters: Total iterations
        beta: Initial step size in (0, 1]
        burn_in: Discarded iterations (adaptation window)
        thin: Keep every ``thin``-th post-burn-in state
        seed: Seed
        chain_index: Stream index of this chain
        f0: Truth for the ``l2_to_truth`` trace
        points_per_unit: Evaluation grid density, 16 by default
        adapt: Whether to tune β during burn-in

    Raises:
        ValueError: If iters ≤ burn_in or thin < 1
    """
    if iters <= burn_in:
        raise ValueError(f"iters ({iters}) must exceed burn_in ({burn_in})")
    if thin < 1:
        raise ValueError(f"thin must be at least 1: {thin}")
    domain = target.regions.domain
    grid = EvaluationGrid(domain, points_per_unit or 2.0**DEFAULT_QUADRATURE_EXTRA_LEVELS)
    tabulate = _GridTabulator(target, grid)
    truth = _on_grid(f0, grid) if f0 is not None else None

    rng = make_rng(seed, CHAIN_STREAM, chain_index)
    w0 = target.prior.draw(rng)
    state = ChainState(w=w0, loglik=target.loglik(w0))

    records: List[Tuple[int, float, int, float]] = []
    kept: List[np.ndarray] = []
    kept_loglik: List[float] = []
    window_accepts = 0
    post_accepts = 0
    for it in range(1, iters + 1):
        state, accepted = pcn_step(state, beta, target, rng)
        values = None
        if truth is not None:
            values = tabulate(state.w)
            l2 = float(grid.l2(values, truth))
        else:
            l2 = float("nan")
        records.append((it, state.loglik, int(accepted), l2))

        if it <= burn_in:
            window_accepts += int(accepted)
            if adapt and it % PCN_ADAPT_WINDOW == 0:
                new_beta = _adapt(beta, window_accepts / PCN_ADAPT_WINDOW)
                if new_beta != beta:
                    logger.debug(f"Iteration {it}: beta {beta:.4f} -> {new_beta:.4f}")
                beta = new_beta
                window_accepts = 0
            continue

        post_accepts += int(accepted)
        if (it - burn_in) % thin == 0:
            kept.append(values if values is not None else tabulate(state.w))
            kept_loglik.append(state.loglik)

    rate = post_accepts / (iters - burn_in)
    low, high = PCN_WARN_ACCEPTANCE
    if not low <= rate <= high:
        logger.warning(f"Chain {chain_index}: acceptance rate {rate:.3f} outside [{low}, {high}]")
    trace = pd.DataFrame(records, columns=["iter", "loglik", "accept", "l2_to_truth"])
    trace.insert(0, "chain", chain_index)
    kept_loglik_arr = np.asarray(kept_loglik)
    logger.info(
        f"Chain {chain_index}: {len(kept)} kept states, acceptance {rate:.3f}, beta {beta:.4f}"
    )
    return PosteriorSummary(
        grid=grid,
        kept_values=np.asarray(kept),
        acceptance_rate=float(rate),
        beta=float(beta),
        trace=trace,
        ess=effective_sample_size(kept_loglik_arr) if kept_loglik_arr.size else 0.0,
        kept_loglik=kept_loglik_arr,
    )


def contraction_diag(
    summary: PosteriorSummary, f0: Union[ScalarField, float], M: float, xi_N: float
) -> float:
    """Fraction of kept states with ‖f − f0‖_2 ≥ M ξ_N.

    Raises:
        ValueError: If the chain kept no state
    """
    if summary.n_kept == 0:
        raise ValueError("Chain has no kept states")
    distances = summary.grid.l2(summary.kept_values, _on_grid(f0, summary.grid))
    return float(np.mean(distances >= M * xi_N))


def pool_summaries(summaries: Sequence[PosteriorSummary]) -> PosteriorSummary:
    """Merge chains by pooling their kept states and traces."""
    if not summaries:
        raise ValueError("Nothing to pool")
    kept = np.concatenate([s.kept_values for s in summaries], axis=0)
    weights = np.array([s.n_kept for s in summaries], dtype=float)
    rate = float(np.average([s.acceptance_rate for s in summaries], weights=weights))
    loglik = np.concatenate([s.kept_loglik for s in summaries])
    return PosteriorSummary(
        grid=summaries[0].grid,
        kept_values=kept,
        acceptance_rate=rate,
        beta=float(np.mean([s.beta for s in summaries])),
        trace=pd.concat([s.trace for s in summaries], ignore_index=True),
        ess=float(sum(s.ess for s in summaries)),
        kept_loglik=loglik,
    )


def visited_field_is_admissible(target: ProxyPosterior, w: np.ndarray, grid: EvaluationGrid) -> bool:
    """f ≥ f_min everywhere on the grid and f = g outside O_0."""
    values = _GridTabulator(target, grid)(w)
    if np.any(values < target.f_min):
        return False
    outside = ~target.regions.in_O0(grid.nodes)
    if not np.any(outside):
        return True
    expected = link_phi(target.baseline_exponent(grid.nodes[outside]), target.f_min)
    return bool(np.allclose(values[outside], expected, rtol=0.0, atol=1e-12))

