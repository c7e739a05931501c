"""Worst-case risk of the estimator over random corners of the Assouad cube."""

from typing import Any, Dict, List

import pandas as pd

from ..estimation.estimator import estimate_f, l2_error
from ..models.assouad import AssouadFamily, assouad_family, default_cube
from ..utils.logger import get_logger
from ..utils.rng import derive_seed, make_rng
from .config import ExperimentConfig
from .context import StudyContext, basis_for, build_context, estimator_level, simulate_observations
from .results import StudyResult, fit_loglog_slope
from .study import Study, records_frame, run_cells

logger = get_logger(__name__)

ASSOUAD_STREAM = 11


def family_for(context: StudyContext, N: int) -> AssouadFamily:
    config = context.config
    return assouad_family(
        d=context.dim,
        s=config.rate.s,
        N=N,
        cube=default_cube(context.regions),
        family=context.family,
        gamma_scale=config.study.gamma_scale,
        J_scale=config.study.J_scale,
        f_min=context.f_min,
        M=context.M,
        regions=context.regions,
    )


def corner_signs(context: StudyContext, family: AssouadFamily, N: int):
    """The corners drawn for N, shape (corners, m)."""
    rng = make_rng(context.config.seed, ASSOUAD_STREAM, N)
    return family.random_signs(context.config.study.corners, rng)


def assouad_cell(context: StudyContext, key: Dict[str, Any]) -> Dict[str, Any]:
    """Squared L² error of f̂★ when the data come from one corner f_ε."""
    N, corner, replicate = key["N"], key["corner"], key["replicate"]
    family = family_for(context, N)
    truth = family.member(corner_signs(context, family, N)[corner])
    seed = derive_seed(context.config.seed, (ASSOUAD_STREAM, N, corner, replicate))
    obs = simulate_observations(context, N, seed, f=truth)
    J = estimator_level(context, N, floor=family.level)
    baseline = context.config.estimator.baseline
    output = estimate_f(obs, basis_for(context, J), M=context.M, baseline=baseline)
    error = l2_error(output.f_hat_star, truth, context.domain, level=J)
    return {**key, "sq_error": error**2, "J": J}


class AssouadStudy(Study):
    """Per N: risk per corner (mean over replicates), its max and mean, and 2^{Jd}γ²."""

    @property
    def name(self) -> str:
        return "assouad_study"

    @property
    def csv_name(self) -> str:
        return "assouad_study.csv"

    @property
    def columns(self) -> List[str]:
        return ["N", "corner", "replicate", "sq_error", "runtime_s", "J", "error"]

    def run(self, context: StudyContext) -> StudyResult:
        config = context.config
        families = {N: family_for(context, N) for N in config.rate.N_grid}
        for N, family in families.items():
            logger.info(
                f"Assouad N={N}: level {family.level}, {family.size} perturbations, "
                f"gamma={family.gamma:.3e}"
            )
        keys = [
            {"N": N, "corner": c, "replicate": r}
            for N in config.rate.N_grid
            for c in range(config.study.corners)
            for r in range(config.study.replicates)
        ]
        records = run_cells(assouad_cell, context, keys, ["sq_error", "J"], config.study.workers)
        frame = records_frame(records, self.columns)

        risks = frame.groupby(["N", "corner"])["sq_error"].mean().rename("risk").reset_index()
        per_N = risks.groupby("N")["risk"]
        summary = pd.DataFrame(
            {
                "worst_risk": per_N.max(),
                "mean_risk": per_N.mean(),
                "lower_bound": pd.Series({N: f.lower_bound for N, f in families.items()}),
                "level": pd.Series({N: f.level for N, f in families.items()}),
                "gamma": pd.Series({N: f.gamma for N, f in families.items()}),
            }
        )
        summary.index.name = "N"
        summary = summary.reset_index()

        fits = {}
        rng = self.bootstrap_rng(context)
        try:
            fits["worst_risk"] = fit_loglog_slope(summary, "worst_risk", bootstrap=0, rng=rng)
            fits["corner_risk"] = fit_loglog_slope(
                risks, "risk", bootstrap=config.study.bootstrap, rng=rng
            )
        except ValueError as e:
            logger.warning(f"Assouad slope not fitted: {e}")
        s, d = config.rate.s, context.dim
        return StudyResult(
            kind=self.name,
            records=frame,
            summary=summary,
            fits=fits,
            info={"expected_slope": -2 * s / (2 * s + d)},
        )


def run_assouad_study(config: ExperimentConfig) -> StudyResult:
    """Worst-case empirical risk over random Assouad corners, per N."""
    return AssouadStudy().run(build_context(config))
