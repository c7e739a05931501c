"""Wavelet least-squares diffusivity estimator and its diagnostics."""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..geometry.domain import DomainSpec
from ..geometry.regions import NestedRegions
from ..models.fields import DiffusivityField, ScalarField, TruncatedField
from ..simulation.config import ObservationSet
from ..simulation.simulator import increments_Y
from ..utils.constants import (
    DEFAULT_BN_KAPPA,
    DEFAULT_QUADRATURE_EXTRA_LEVELS,
    DEFAULT_TRUNCATION_M,
)
from ..utils.errors import BasisError
from ..utils.logger import get_logger
from ..utils.numerics import midpoint_grid
from ..wavelets.basis import BasisSpec, build_basis
from ..wavelets.family import WaveletFamily
from ..wavelets.projection import CoeffVector, ExpansionField
from .regression import Baseline, SolverReport, build_regression, solve_lsq

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class EstimatorOutput:
    """ĝ_N, f̂_N = g + ĝ_N and the truncation f̂★ = min(f̂_N, M)_+."""

    coeffs: CoeffVector
    f_hat: ExpansionField
    f_hat_star: TruncatedField
    report: SolverReport

    @property
    def M(self) -> float:
        return self.f_hat_star.upper


def estimate_f(
    obs: ObservationSet,
    basis: BasisSpec,
    M: float = DEFAULT_TRUNCATION_M,
    baseline: Baseline = 1.0,
) -> EstimatorOutput:
    """build_regression → solve_lsq → synthesize → truncate.

    Args:
        obs: Observations
        basis: Basis of V_J
        M: Truncation level (taken from the truth's known bound in experiments)
        baseline: Known boundary function g

    Returns:
        EstimatorOutput
    """
    problem = build_regression(obs, basis, baseline)
    coeffs, report = solve_lsq(problem)
    f_hat = ExpansionField(coeffs=coeffs, baseline=baseline)
    logger.debug(
        f"Estimated {basis.size} coefficients (rank {report.rank}, "
        f"residual {report.residual_norm:.3e})"
    )
    return EstimatorOutput(
        coeffs=coeffs,
        f_hat=f_hat,
        f_hat_star=TruncatedField(inner=f_hat, upper=M),
        report=report,
    )


def _values(g: Union[ScalarField, float], points: np.ndarray) -> np.ndarray:
    if isinstance(g, ScalarField):
        return g.evaluate(points)
    return np.full(points.shape[0], float(g))


def _active_weight(obs: ObservationSet, regions: NestedRegions) -> Tuple[np.ndarray, float]:
    """Active-row mask and the weight vol(O)/N of each row.

    The invariant law is uniform on O, so vol(O)·E[g(X)²] = ‖g‖_2² and both
    the semi-norm and the Gram use the same weight.
    """
    return regions.in_O0_delta(obs.starts), regions.domain.volume / obs.N


def empirical_norm(
    obs: ObservationSet, g: Union[ScalarField, float], regions: NestedRegions
) -> float:
    """|g|_N = sqrt(vol(O)/N · Σ g(X_{(i−1)D})² 1_{A_i}).

    On a unit-volume domain this is the plain root mean square over active
    rows; the vol(O) weight keeps |g|_N² → ‖g‖_2² on any domain.
    """
    starts = obs.starts
    active, weight = _active_weight(obs, regions)
    return float(np.sqrt(weight * np.sum(_values(g, starts) ** 2 * active)))


def empirical_gram(
    obs: ObservationSet, basis: BasisSpec, regions: Optional[NestedRegions] = None
) -> np.ndarray:
    """vol(O)/N · Ψᵀ Ψ over the active rows.

    Under the uniform invariant law on O its expectation is the L² Gram
    matrix, the identity. For g = Σ c_k ψ_k, cᵀ G c = |g|_N².
    """
    regions = regions if regions is not None else basis.regions
    active, weight = _active_weight(obs, regions)
    design = basis.design_matrix(obs.starts[active])
    return (design.T @ design).toarray() * weight


def check_BN(
    obs: ObservationSet,
    basis: BasisSpec,
    regions: Optional[NestedRegions] = None,
    kappa: float = DEFAULT_BN_KAPPA,
) -> Tuple[bool, float]:
    """Whether (1−κ)‖g‖² ≤ |g|_N² ≤ (1+κ)‖g‖² holds on all of V_J.

    Equivalent to every eigenvalue of ``empirical_gram`` lying in [1−κ, 1+κ].
    ``regions`` defaults to the regions the basis was built on.

    Returns:
        Tuple of (event holds, worst relative eigenvalue deviation)
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1): {kappa}")
    if obs.N < basis.size:
        logger.debug(f"B_N fails: N={obs.N} below dim(V_J)={basis.size}")
        return False, 1.0
    eigenvalues = np.linalg.eigvalsh(empirical_gram(obs, basis, regions))
    worst = float(np.max(np.abs(eigenvalues - 1.0)))
    return worst <= kappa, worst


def l2_error(
    f_hat: Union[ScalarField, float],
    f0: Union[ScalarField, float],
    domain: DomainSpec,
    level: int = 0,
    points_per_unit: Optional[float] = None,
) -> float:
    """‖f̂ − f0‖_{L²(O)} by the midpoint rule at 2^(level+4) points per unit length.

    Example:
        >>> round(l2_error(1.1, 1.0, DomainSpec.unit_cube(2)), 12)
        0.1
    """
    if points_per_unit is None:
        points_per_unit = 2.0 ** (level + DEFAULT_QUADRATURE_EXTRA_LEVELS)
    lo, hi = domain.bounding_box
    nodes, cell, _ = midpoint_grid(lo, hi, points_per_unit)
    nodes = nodes[domain.contains(nodes)]
    diff = _values(f_hat, nodes) - _values(f0, nodes)
    return float(np.sqrt(np.sum(diff**2) * cell))


def plug_in_test(
    f_hat: Union[ScalarField, float],
    f0: Union[ScalarField, float],
    M_tilde: float,
    xi_N: float,
    domain: DomainSpec,
    level: int = 0,
) -> bool:
    """Rejection indicator of {‖f̂ − f0‖_2 ≥ M̃ ξ_N} (closed region)."""
    return l2_error(f_hat, f0, domain, level) >= M_tilde * xi_N


@dataclass(frozen=True)
class LevelSelection:
    """Outcome of the penalized dyadic level search."""

    J: int
    scores: Dict[int, float]
    penalty: float


def select_level(
    obs: ObservationSet,
    family: WaveletFamily,
    regions: NestedRegions,
    levels: Sequence[int],
    c: Optional[float] = None,
    J0: Optional[int] = None,
) -> LevelSelection:
    """Pick J minimizing RSS/N + c·dim(V_J)/N over candidate levels.

    Args:
        obs: Observations
        family: Wavelet family
        regions: Nested regions
        levels: Candidate finest levels
        c: Penalty constant; 2·Var(Y) by default
        J0: Coarse level; the minimal feasible one by default

    Raises:
        BasisError: If no candidate level is feasible
    """
    penalty = 2.0 * float(np.var(increments_Y(obs))) if c is None else float(c)
    scores: Dict[int, float] = {}
    for J in sorted(set(int(level) for level in levels)):
        try:
            basis = build_basis(family, regions, J0=J0, J=J)
        except BasisError as e:
            logger.debug(f"Skipping level {J}: {e}")
            continue
        problem = build_regression(obs, basis)
        _, report = solve_lsq(problem)
        scores[J] = report.residual_norm**2 / obs.N + penalty * basis.size / obs.N
    if not scores:
        raise BasisError(f"No feasible level among {list(levels)}")
    best = min(scores, key=scores.get)
    logger.info(f"Selected J={best} from {sorted(scores)}")
    return LevelSelection(J=best, scores=scores, penalty=penalty)


def estimate_grid(output: EstimatorOutput, domain: DomainSpec, points_per_unit: float) -> pd.DataFrame:
    """Gridded dump ``x1..xd,f_hat,f_hat_star`` over the domain."""
    lo, hi = domain.bounding_box
    nodes, _, _ = midpoint_grid(lo, hi, points_per_unit)
    nodes = nodes[domain.contains(nodes)]
    frame = pd.DataFrame(nodes, columns=[f"x{j + 1}" for j in range(domain.dim)])
    frame["f_hat"] = output.f_hat.evaluate(nodes)
    frame["f_hat_star"] = output.f_hat_star.evaluate(nodes)
    return frame


def write_estimate_grid(
    output: EstimatorOutput, domain: DomainSpec, path: Union[str, Path], points_per_unit: float
) -> None:
    frame = estimate_grid(output, domain, points_per_unit)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(frame)} grid values to {path}")


def truth_error(output: EstimatorOutput, truth: DiffusivityField, level: int) -> Dict[str, float]:
    """L² errors of f̂ and f̂★ against the truth."""
    domain = output.coeffs.basis.regions.domain
    return {
        "l2_f_hat": l2_error(output.f_hat, truth, domain, level),
        "l2_f_hat_star": l2_error(output.f_hat_star, truth, domain, level),
    }
