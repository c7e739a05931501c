"""Minimax-rate study: simulate, estimate and measure the L² error over an N grid."""

from typing import Any, Dict, List

from ..estimation.estimator import check_BN, estimate_f, l2_error
from ..utils.logger import get_logger
from ..utils.rng import derive_seed
from .config import ExperimentConfig
from .context import StudyContext, basis_for, build_context, estimator_level, simulate_observations
from .results import StudyResult, fit_loglog_slope, summarize_by_N
from .study import Study, records_frame, run_cells

logger = get_logger(__name__)

RATE_STREAM = 10


def rate_cell(context: StudyContext, key: Dict[str, Any]) -> Dict[str, Any]:
    """One (N, replicate) cell: ‖f̂★ − f0‖_2 at J chosen by the rate rule."""
    N, replicate = key["N"], key["replicate"]
    seed = derive_seed(context.config.seed, (RATE_STREAM, N, replicate))
    obs = simulate_observations(context, N, seed)
    J = estimator_level(context, N)
    baseline = context.config.estimator.baseline
    basis = basis_for(context, J)
    output = estimate_f(obs, basis, M=context.M, baseline=baseline)
    holds, _ = check_BN(obs, basis, context.regions, kappa=context.config.estimator.kappa)
    return {
        **key,
        "l2_error": l2_error(output.f_hat_star, context.truth, context.domain, level=J),
        "J": J,
        "B_N": float(holds),
    }


class RateStudy(Study):
    """Fits the slope of the median L² error against N; the target is −s/(2s+d)."""

    @property
    def name(self) -> str:
        return "rate_study"

    @property
    def csv_name(self) -> str:
        return "rate_study.csv"

    @property
    def columns(self) -> List[str]:
        return ["N", "replicate", "l2_error", "runtime_s", "J", "B_N", "error"]

    def run(self, context: StudyContext) -> StudyResult:
        config = context.config
        keys = [
            {"N": N, "replicate": r}
            for N in config.rate.N_grid
            for r in range(config.study.replicates)
        ]
        logger.info(f"Rate study: {len(keys)} cells over N={list(config.rate.N_grid)}")
        metrics = ["l2_error", "J", "B_N"]
        records = run_cells(rate_cell, context, keys, metrics, config.study.workers)
        frame = records_frame(records, self.columns)

        d, s = context.dim, config.rate.s
        summary = summarize_by_N(frame, ["l2_error"])
        summary["rate_reference"] = summary["N"].astype(float) ** (-s / (2 * s + d))
        summary["B_N_frequency"] = summary["N"].map(frame.groupby("N")["B_N"].mean())
        fits = {}
        try:
            fits["l2_error"] = fit_loglog_slope(
                frame, "l2_error", bootstrap=config.study.bootstrap, rng=self.bootstrap_rng(context)
            )
        except ValueError as e:
            logger.warning(f"Rate study slope not fitted: {e}")
        return StudyResult(
            kind=self.name,
            records=frame,
            summary=summary,
            fits=fits,
            info={"expected_slope": -s / (2 * s + d), "J0": context.J0},
        )


def run_rate_study(config: ExperimentConfig) -> StudyResult:
    """simulate → estimate → l2_error per (N, replicate), then the log-log slope."""
    return RateStudy().run(build_context(config))
