"""Posterior contraction study: pCN chains on simulated data over an N grid."""

import functools
from typing import Any, Dict, List, Tuple

from ..bayes.pcn import (
    PosteriorSummary,
    ProxyPosterior,
    contraction_diag,
    pool_summaries,
    run_chain,
)
from ..bayes.priors import (
    GaussianPrior,
    MaternPrior,
    MaternSpec,
    WaveletPriorSpec,
    WaveletSeriesPrior,
    matern_lattice,
)
from ..estimation.estimator import estimate_f, l2_error
from ..models.rates import RateParams, rate_sequences
from ..simulation.config import ObservationSet
from ..utils.logger import get_logger
from ..utils.rng import derive_seed
from .config import ExperimentConfig
from .context import StudyContext, basis_for, build_context, estimator_level, simulate_observations
from .results import StudyResult, fit_loglog_slope, summarize_by_N
from .study import Study, records_frame, run_cells

logger = get_logger(__name__)

POSTERIOR_STREAM = 12


@functools.lru_cache(maxsize=4)
def _matern_prior(context: StudyContext) -> MaternPrior:
    prior = context.config.prior
    spec = MaternSpec(
        s=prior.s or context.config.rate.s,
        axes=matern_lattice(context.regions, prior.lattice_points),
        jitter=prior.jitter,
    )
    return MaternPrior(spec)


def prior_for(context: StudyContext, N: int) -> GaussianPrior:
    """Wavelet-series prior on V_J (J by the rate rule) or the Matérn lattice prior."""
    prior = context.config.prior
    if prior.kind == "matern":
        return _matern_prior(context)
    s = prior.s or context.config.rate.s
    basis = basis_for(context, estimator_level(context, N))
    return WaveletSeriesPrior(WaveletPriorSpec(s=s, basis=basis))


def sample_posterior(
    context: StudyContext, obs: ObservationSet, seed: int
) -> Tuple[PosteriorSummary, ProxyPosterior]:
    """Run the configured chains on ``obs`` and pool them."""
    prior_config = context.config.prior
    baseline = context.config.estimator.baseline
    target = ProxyPosterior(
        prior=prior_for(context, obs.N),
        obs=obs,
        cutoff=context.cutoff,
        f_min=context.f_min,
        baseline=None if baseline == 1.0 else baseline,
    )
    summaries = [
        run_chain(
            target,
            iters=prior_config.iters,
            beta=prior_config.beta,
            burn_in=prior_config.burn_in,
            thin=prior_config.thin,
            seed=seed,
            chain_index=k,
            f0=context.truth,
            points_per_unit=prior_config.grid_points_per_unit,
        )
        for k in range(prior_config.chains)
    ]
    pooled = summaries[0] if len(summaries) == 1 else pool_summaries(summaries)
    return pooled, target


def contraction_radius(context: StudyContext, N: int) -> float:
    """ξ_N = N^{−s/(2s+d)}."""
    rate = context.config.rate
    return rate_sequences(RateParams(d=context.dim, a=rate.a, s=rate.s, N=N)).xi_N


def posterior_cell(context: StudyContext, key: Dict[str, Any]) -> Dict[str, Any]:
    """Posterior-mean error, contraction fraction and the least-squares error on one dataset."""
    N, replicate = key["N"], key["replicate"]
    seed = derive_seed(context.config.seed, (POSTERIOR_STREAM, N, replicate))
    obs = simulate_observations(context, N, seed)
    summary, _ = sample_posterior(context, obs, seed)
    contraction = contraction_diag(
        summary, context.truth, context.config.prior.M_contraction, contraction_radius(context, N)
    )
    J = estimator_level(context, N)
    baseline = context.config.estimator.baseline
    lsq = estimate_f(obs, basis_for(context, J), M=context.M, baseline=baseline)
    return {
        **key,
        "posterior_l2": summary.mean_l2(context.truth),
        "contraction": contraction,
        "acceptance": summary.acceptance_rate,
        "lsq_l2": l2_error(lsq.f_hat_star, context.truth, context.domain, level=J),
        "ess": summary.ess,
    }


class PosteriorStudy(Study):
    """Per N: posterior-mean L² error and the mass outside the M ξ_N ball."""

    @property
    def name(self) -> str:
        return "posterior_study"

    @property
    def csv_name(self) -> str:
        return "posterior_study.csv"

    @property
    def columns(self) -> List[str]:
        return [
            "N",
            "replicate",
            "posterior_l2",
            "contraction",
            "acceptance",
            "lsq_l2",
            "runtime_s",
            "ess",
            "error",
        ]

    def run(self, context: StudyContext) -> StudyResult:
        config = context.config
        keys = [
            {"N": N, "replicate": r}
            for N in config.rate.N_grid
            for r in range(config.study.replicates)
        ]
        logger.info(f"Posterior study: {len(keys)} cells, {config.prior.kind} prior")
        metrics = ["posterior_l2", "contraction", "acceptance", "lsq_l2", "ess"]
        records = run_cells(posterior_cell, context, keys, metrics, config.study.workers)
        frame = records_frame(records, self.columns)
        summary = summarize_by_N(frame, ["posterior_l2", "contraction", "lsq_l2"])
        summary["xi_N"] = [contraction_radius(context, int(N)) for N in summary["N"]]
        summary["lsq_ratio"] = summary["posterior_l2_median"] / summary["lsq_l2_median"]

        fits = {}
        rng = self.bootstrap_rng(context)
        try:
            fits["posterior_l2"] = fit_loglog_slope(
                frame, "posterior_l2", bootstrap=config.study.bootstrap, rng=rng
            )
        except ValueError as e:
            logger.warning(f"Posterior slope not fitted: {e}")
        s, d = config.rate.s, context.dim
        return StudyResult(
            kind=self.name,
            records=frame,
            summary=summary,
            fits=fits,
            info={"expected_slope": -s / (2 * s + d)},
        )


def run_posterior_study(config: ExperimentConfig) -> StudyResult:
    """run_chain per (N, replicate); posterior-mean error and contraction fraction."""
    return PosteriorStudy().run(build_context(config))
