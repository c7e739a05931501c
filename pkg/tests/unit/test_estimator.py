"""Unit tests for the wavelet least-squares estimator."""

import itertools

import numpy as np
import pytest

from src.estimation.estimator import (
    check_BN,
    empirical_gram,
    empirical_norm,
    estimate_f,
    estimate_grid,
    l2_error,
    plug_in_test,
    select_level,
    truth_error,
)
from src.estimation.regression import build_regression, least_squares, solve_lsq
from src.geometry.domain import DomainSpec
from src.geometry.regions import build_nested_regions
from src.models.fields import ConstantField
from src.simulation.config import ObservationSet, SdeConfig
from src.simulation.simulator import simulate_paths
from src.utils.errors import NumericalError
from src.wavelets.basis import build_basis
from src.wavelets.family import build_family
from src.wavelets.projection import CoeffVector, ExpansionField, synthesize


@pytest.fixture(scope="module")
def regions():
    return build_nested_regions(DomainSpec.hyperrectangle((0.0,), (7.0,)), 0.875)


@pytest.fixture(scope="module")
def basis(regions):
    return build_basis(build_family(4), regions, J0=4, J=5)


def _zigzag_path(target, D, n, lower=0.05, upper=6.95):
    """Path whose squared increments equal 2D·target(start) exactly."""
    x = np.empty(n + 1)
    x[0] = lower
    direction = 1.0
    for i in range(n):
        step = np.sqrt(2.0 * D * target(np.array([[x[i]]]))[0])
        if x[i] + direction * step > upper or x[i] + direction * step < lower:
            direction = -direction
        x[i + 1] = x[i] + direction * step
    return ObservationSet(points=x.reshape(-1, 1), D=D)


def _lattice_minimizer(A, b, h_final=1e-4):
    """Coarse-to-fine lattice search for min ‖A c − b‖²; the spacing halves once the
    stencil center wins."""
    k = A.shape[1]
    offsets = np.array(list(itertools.product(range(-2, 3), repeat=k)), dtype=float)
    center = np.zeros(k)
    h = 1.0
    for _ in range(1000):
        if h <= h_final:
            break
        candidates = center + h * offsets
        best = int(np.argmin(np.sum((candidates @ A.T - b) ** 2, axis=1)))
        center = candidates[best]
        if np.max(np.abs(offsets[best])) < 2:
            h /= 2.0
    return center


@pytest.fixture(scope="module")
def exact_case(basis):
    rng = np.random.default_rng(11)
    coeffs = CoeffVector(basis, 0.01 * rng.normal(size=basis.size))

    def target(points):
        return 1.0 + synthesize(coeffs, points)

    return coeffs, _zigzag_path(target, D=1e-3, n=6000)


class TestRegression:
    """Test the indicator-weighted regression."""

    def test_inactive_rows_are_zero(self, basis, exact_case):
        """Test rows starting outside O_0^δ are zeroed."""
        _, obs = exact_case
        problem = build_regression(obs, basis)
        inactive = np.flatnonzero(~problem.active)
        assert inactive.size > 0
        assert problem.design[inactive].nnz == 0
        np.testing.assert_array_equal(problem.responses[inactive], 0.0)

    def test_no_active_rows(self, basis):
        """Test paths outside O_0^δ raise NumericalError."""
        obs = ObservationSet(points=np.array([[0.1], [0.2], [0.1]]), D=1e-3)
        with pytest.raises(NumericalError):
            build_regression(obs, basis)

    def test_exact_recovery(self, basis, exact_case):
        """Test noiseless responses in V_J are recovered exactly."""
        coeffs, obs = exact_case
        estimate, report = solve_lsq(build_regression(obs, basis))
        assert report.rank == basis.size
        assert report.residual_norm < 1e-8
        np.testing.assert_allclose(estimate.values, coeffs.values, atol=1e-8)

    def test_matches_lattice_search(self):
        """Test the minimal-norm solver against a lattice search on small problems."""
        rng = np.random.default_rng(23)
        for _ in range(50):
            n_rows = int(rng.integers(50, 101))
            k = int(rng.integers(2, 7))
            A = rng.normal(size=(n_rows, k))
            b = A @ rng.normal(size=k) + 0.1 * rng.normal(size=n_rows)
            solution, rank, _ = least_squares(A, b)
            assert rank == k
            np.testing.assert_allclose(solution, _lattice_minimizer(A, b), atol=1e-3)


class TestEstimator:
    """Test estimate_f and its diagnostics."""

    def test_estimate_reproduces_target(self, basis, exact_case):
        """Test f̂ = 1 + g on the interior."""
        coeffs, obs = exact_case
        output = estimate_f(obs, basis, M=3.0)
        x = np.linspace(2.0, 5.0, 31).reshape(-1, 1)
        np.testing.assert_allclose(output.f_hat.evaluate(x), 1.0 + synthesize(coeffs, x), atol=1e-7)
        assert output.M == 3.0

    def test_truncation(self, basis, exact_case):
        """Test f̂★ lies in [0, M]."""
        _, obs = exact_case
        output = estimate_f(obs, basis, M=1.0)
        x = np.linspace(0.0, 7.0, 200).reshape(-1, 1)
        values = output.f_hat_star.evaluate(x)
        assert np.all(values >= 0.0)
        assert np.all(values <= 1.0)

    def test_equals_baseline_outside_O0(self, basis, exact_case):
        """Test f̂ = 1 away from O_0^δ."""
        _, obs = exact_case
        output = estimate_f(obs, basis)
        np.testing.assert_allclose(output.f_hat.evaluate([[0.5], [6.5]]), 1.0)

    def test_grid_dump(self, basis, exact_case, regions):
        """Test the gridded estimate has one row per node."""
        _, obs = exact_case
        frame = estimate_grid(estimate_f(obs, basis), regions.domain, points_per_unit=4.0)
        assert list(frame.columns) == ["x1", "f_hat", "f_hat_star"]
        assert len(frame) == 28

    def test_truth_error_small(self, basis, exact_case):
        """Test truth errors against the generating field."""
        coeffs, obs = exact_case
        output = estimate_f(obs, basis)
        errors = truth_error(output, ExpansionField(coeffs=coeffs), level=5)
        assert errors["l2_f_hat"] < 1e-6


class TestDiagnostics:
    """Test norms, B_N, the plug-in test and level selection."""

    def test_l2_error_constant(self):
        """Test ‖1.1 − 1‖ on the unit square."""
        assert l2_error(1.1, 1.0, DomainSpec.unit_cube(2)) == pytest.approx(0.1)

    def test_empirical_norm(self, regions):
        """Test |1|_N² is vol(O) times the fraction of active rows."""
        obs = ObservationSet(points=np.array([[3.0], [0.1], [3.0]]), D=1e-3)
        assert empirical_norm(obs, 1.0, regions) == pytest.approx(np.sqrt(7.0 * 0.5))

    def test_empirical_norm_of_unit_basis_function(self, regions, basis):
        """Test |g|_N² ≈ ‖g‖_2² = 1 for a basis function on a domain of volume 7."""
        values = np.zeros(basis.size)
        values[0] = 1.0
        g = ExpansionField(coeffs=CoeffVector(basis, values), baseline=0.0)
        points, _ = regions.domain.sample_uniform(400000, np.random.default_rng(5))
        obs = ObservationSet(points=points, D=1e-3)
        assert empirical_norm(obs, g, regions) ** 2 == pytest.approx(1.0, rel=0.08)

    def test_gram_matches_empirical_norm(self, regions, basis):
        """Test cᵀ G c equals |g|_N² for g = Σ c_k ψ_k."""
        rng = np.random.default_rng(8)
        c = rng.normal(size=basis.size)
        g = ExpansionField(coeffs=CoeffVector(basis, c), baseline=0.0)
        points, _ = regions.domain.sample_uniform(5000, rng)
        obs = ObservationSet(points=points, D=1e-3)
        gram = empirical_gram(obs, basis, regions)
        assert c @ gram @ c == pytest.approx(empirical_norm(obs, g, regions) ** 2, rel=1e-9)

    def test_BN_holds_for_uniform_samples(self, regions):
        """Test the empirical Gram is close to identity for many uniform states."""
        coarse = build_basis(build_family(4), regions, J0=4, J=4)
        points, _ = regions.domain.sample_uniform(100000, np.random.default_rng(3))
        obs = ObservationSet(points=points, D=1e-3)
        holds, worst = check_BN(obs, coarse, kappa=0.5)
        assert holds
        assert worst < 0.5
        assert check_BN(obs, coarse, regions, kappa=0.5) == (holds, worst)

    @pytest.mark.slow
    def test_BN_frequency_over_paths(self, regions):
        """Test B_N holds on at least 95 of 100 paths when 2^J ≤ sqrt(ND)/8."""
        coarse = build_basis(build_family(2), regions)
        config = SdeConfig(
            f=ConstantField(0.1, 1), regions=regions, D=2.0, N=32768, seed=17, substeps=8
        )
        assert 2.0**coarse.J <= np.sqrt(config.N * config.D) / 8
        paths = simulate_paths(config, n_paths=100)
        passed = sum(check_BN(obs, coarse, regions, kappa=0.5)[0] for obs in paths)
        assert passed >= 95

    def test_BN_fails_below_dimension(self, basis):
        """Test N < dim(V_J) fails B_N."""
        obs = ObservationSet(points=np.full((5, 1), 3.0), D=1e-3)
        assert check_BN(obs, basis, kappa=0.5) == (False, 1.0)

    def test_BN_kappa_range(self, basis):
        """Test κ outside (0, 1) raises ValueError."""
        obs = ObservationSet(points=np.full((5, 1), 3.0), D=1e-3)
        with pytest.raises(ValueError):
            check_BN(obs, basis, kappa=1.5)

    def test_plug_in_test(self):
        """Test rejection at the closed threshold."""
        domain = DomainSpec.unit_cube(1)
        assert plug_in_test(1.2, 1.0, M_tilde=1.0, xi_N=0.1, domain=domain)
        assert not plug_in_test(1.05, 1.0, M_tilde=1.0, xi_N=0.1, domain=domain)

    def test_select_level(self, regions, exact_case):
        """Test level selection scores every feasible candidate."""
        _, obs = exact_case
        selection = select_level(obs, build_family(4), regions, levels=[4, 5, 6], c=1e-6)
        assert set(selection.scores) == {4, 5, 6}
        assert selection.J in (5, 6)
        assert selection.penalty == 1e-6
