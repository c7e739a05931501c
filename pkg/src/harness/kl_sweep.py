"""KL sweep: moments of the proxy log-likelihood ratio for f = f0 + ε h.

The per-transition mean should scale like ε² (slope 2 against ε) and the
variance of the N-sum like N (slope 1 against N at fixed ε). All ε at the
same N share one seed, so the ε slope is fitted on common random numbers.
"""

from typing import Any, Dict, List

from ..likelihood.proxy import mc_transition_kl
from ..models.fields import PerturbedField
from ..models.truth_library import k_bump
from ..simulation.config import DriftMode
from ..utils.logger import get_logger
from ..utils.rng import derive_seed
from .config import ExperimentConfig
from .context import StudyContext, build_context
from .results import SlopeFit, StudyResult, fit_loglog_slope
from .study import Study, records_frame, run_cells

logger = get_logger(__name__)

KL_STREAM = 13


def perturbed_truth(context: StudyContext, epsilon: float) -> PerturbedField:
    """f0 + ε h with h a unit bump supported in K."""
    h = k_bump(context.regions, width_fraction=context.config.kl.perturbation_width)
    return PerturbedField(base_field=context.truth, perturbation=h, epsilon=epsilon)


def kl_cell(context: StudyContext, key: Dict[str, Any]) -> Dict[str, Any]:
    """mc_transition_kl at one (ε, N)."""
    kl = context.config.kl
    seed = derive_seed(context.config.seed, (KL_STREAM, key["N"]))
    estimate = mc_transition_kl(
        f0=context.truth,
        f=perturbed_truth(context, key["epsilon"]),
        D=kl.D,
        n_mc=kl.n_mc,
        seed=seed,
        regions=context.regions,
        N=key["N"],
        n_paths=kl.n_paths,
        drift_mode=DriftMode(context.config.sde.drift_mode),
        substeps=context.config.sde.substeps,
    )
    return {
        **key,
        "mean_per_transition": estimate.mean,
        "stderr": estimate.mean_stderr,
        "var_sum": estimate.variance,
        "var_stderr": estimate.variance_stderr,
    }


class KLSweep(Study):
    """Grid over ε × N; fits the ε slope of the mean and the N slope of the variance."""

    @property
    def name(self) -> str:
        return "kl_sweep"

    @property
    def csv_name(self) -> str:
        return "kl_sweep.csv"

    @property
    def columns(self) -> List[str]:
        return [
            "epsilon",
            "N",
            "mean_per_transition",
            "var_sum",
            "stderr",
            "var_stderr",
            "runtime_s",
            "error",
        ]

    def run(self, context: StudyContext) -> StudyResult:
        kl = context.config.kl
        keys = [{"epsilon": float(e), "N": int(N)} for e in kl.epsilons for N in kl.N_grid]
        logger.info(f"KL sweep: {len(kl.epsilons)} epsilons x {len(kl.N_grid)} path lengths")
        metrics = ["mean_per_transition", "var_sum", "stderr", "var_stderr"]
        records = run_cells(kl_cell, context, keys, metrics, context.config.study.workers)
        frame = records_frame(records, self.columns)

        fits: Dict[str, SlopeFit] = {}
        try:
            fits["mean_vs_epsilon"] = fit_loglog_slope(
                frame, "mean_per_transition", x="epsilon", bootstrap=0
            )
        except ValueError as e:
            logger.warning(f"KL mean slope not fitted: {e}")
        for epsilon, group in frame.groupby("epsilon"):
            try:
                fits[f"var_vs_N@{epsilon:g}"] = fit_loglog_slope(
                    group, "var_sum", x="N", bootstrap=0
                )
            except ValueError as e:
                logger.warning(f"KL variance slope at epsilon={epsilon:g} not fitted: {e}")

        summary = frame.groupby("epsilon")["mean_per_transition"].median()
        return StudyResult(
            kind=self.name,
            records=frame,
            summary=summary.rename("mean_median").reset_index(),
            fits=fits,
            info={"expected_mean_slope": 2.0, "expected_var_slope": 1.0},
        )


def run_kl_sweep(config: ExperimentConfig) -> StudyResult:
    """mc_transition_kl over the ε and N grids with the two slope fits."""
    return KLSweep().run(build_context(config))
