"""Least-squares regression of squared increments on the wavelet basis.

Row i of the problem is ψ(X_{(i−1)D}) with response Y_i − g(X_{(i−1)D}),
both multiplied by the indicator of X_{(i−1)D} ∈ O_0^δ. The baseline g is
1 for the standard model and a known field otherwise.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import linalg, sparse

from ..models.fields import ScalarField
from ..simulation.config import ObservationSet
from ..simulation.simulator import increments_Y
from ..utils.constants import LSTSQ_RCOND
from ..utils.errors import NumericalError
from ..utils.logger import get_logger
from ..wavelets.basis import BasisSpec
from ..wavelets.projection import CoeffVector

logger = get_logger(__name__)

Baseline = Union[float, ScalarField]


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """Design and responses with inactive rows zeroed.

    Attributes:
        basis: Basis whose functions index the columns
        design: Sparse N×K matrix ψ_k(X_{(i−1)D}) · 1_{A_i}
        responses: (Y_i − g(X_{(i−1)D})) · 1_{A_i}
        active: Boolean mask of rows with X_{(i−1)D} ∈ O_0^δ
    """

    basis: BasisSpec
    design: sparse.csr_matrix
    responses: np.ndarray
    active: np.ndarray

    @property
    def N(self) -> int:
        return self.responses.size

    @property
    def active_rows(self) -> int:
        return int(np.count_nonzero(self.active))

    def active_system(self):
        """Dense design and responses restricted to the active rows."""
        rows = np.flatnonzero(self.active)
        return self.design[rows].toarray(), self.responses[rows]


@dataclass(frozen=True)
class SolverReport:
    """Outcome of the least-squares solve."""

    rank: int
    residual_norm: float
    singular_max: float
    singular_min: float
    active_rows: int


def _baseline_values(baseline: Baseline, points: np.ndarray) -> np.ndarray:
    if isinstance(baseline, ScalarField):
        return baseline.evaluate(points)
    return np.full(points.shape[0], float(baseline))


def build_regression(
    obs: ObservationSet, basis: BasisSpec, baseline: Baseline = 1.0
) -> RegressionProblem:
    """Assemble the indicator-weighted regression.

    Args:
        obs: Observations X_0, ..., X_{ND}
        basis: Basis of V_J (carries the nested regions)
        baseline: Known boundary function g; 1 for the standard model

    Raises:
        NumericalError: If no starting state lies in O_0^δ
    """
    starts = obs.starts
    active = np.asarray(basis.regions.in_O0_delta(starts), dtype=bool)
    if not np.any(active):
        raise NumericalError(f"No active regression rows among N={obs.N} starting states")
    weights = sparse.diags(active.astype(float))
    design = (weights @ basis.design_matrix(starts)).tocsr()
    design.eliminate_zeros()
    responses = (increments_Y(obs) - _baseline_values(baseline, starts)) * active
    logger.debug(f"Regression: {int(active.sum())}/{obs.N} active rows, {basis.size} columns")
    return RegressionProblem(basis=basis, design=design, responses=responses, active=active)


def least_squares(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, int, np.ndarray]:
    """Minimal-norm minimizer of ‖A c − b‖ with small singular values cut.

    Returns:
        Tuple of (solution, effective rank, singular values)
    """
    solution, _, rank, singular = linalg.lstsq(A, b, cond=LSTSQ_RCOND, lapack_driver="gelsd")
    return solution, int(rank), singular


def solve_lsq(problem: RegressionProblem):
    """Minimal-norm least-squares coefficients.

    Uses the SVD-based LAPACK driver with singular values below
    LSTSQ_RCOND times the largest treated as zero.

    Returns:
        Tuple of (CoeffVector, SolverReport)
    """
    A, b = problem.active_system()
    solution, rank, singular = least_squares(A, b)
    residual = float(np.linalg.norm(A @ solution - b))
    report = SolverReport(
        rank=rank,
        residual_norm=residual,
        singular_max=float(singular[0]) if singular.size else 0.0,
        singular_min=float(singular[-1]) if singular.size else 0.0,
        active_rows=problem.active_rows,
    )
    if report.rank < problem.basis.size:
        logger.debug(f"Rank-deficient design: rank {report.rank} < {problem.basis.size}")
    return CoeffVector(problem.basis, solution), report
