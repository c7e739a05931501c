"""Unit tests for the Matérn and wavelet-series priors."""

import numpy as np
import pytest

from src.bayes.priors import (
    MaternPrior,
    MaternSpec,
    WaveletPriorSpec,
    WaveletSeriesPrior,
    build_prior,
    matern_kernel,
    matern_lattice,
    rescale,
    rescale_factor,
    rkhs_norm,
    sample_matern,
    sample_wavelet_series,
    truth_rkhs_report,
)
from src.geometry.domain import DomainSpec
from src.geometry.regions import build_nested_regions
from src.models.fields import ConstantField, GridField
from src.utils.errors import ConfigError
from src.wavelets.basis import build_basis
from src.wavelets.family import build_family
from src.wavelets.projection import CoeffVector


@pytest.fixture(scope="module")
def regions():
    return build_nested_regions(DomainSpec.hyperrectangle((0.0,), (7.0,)), 0.875)


@pytest.fixture(scope="module")
def basis(regions):
    return build_basis(build_family(4), regions, J0=4, J=5)


class TestRescaling:
    """Test the N-dependent rescaling of the prior."""

    def test_factor(self):
        """Test N^{d/(4s+2d)}."""
        assert rescale_factor(1024, 2.0, 1) == pytest.approx(2.0)
        assert rescale_factor(1, 2.0, 1) == 1.0

    def test_rescale_array(self):
        """Test arrays are divided by the factor."""
        np.testing.assert_allclose(rescale(np.array([2.0, 4.0]), 1024, 2.0, 1), [1.0, 2.0])

    def test_rescale_grid_field(self):
        """Test grid values are divided by the factor."""
        field = GridField(axes=(np.array([0.0, 1.0]),), values=np.array([2.0, 6.0]))
        scaled = rescale(field, 1024, 2.0, 1)
        np.testing.assert_allclose(scaled.evaluate([[0.0], [1.0]]), [1.0, 3.0])


class TestMatern:
    """Test the Matérn kernel and lattice prior."""

    def test_kernel_at_zero(self):
        """Test K(0) = 1."""
        assert matern_kernel(np.array([0.0]), 1.5)[0] == 1.0

    def test_exponential_case(self):
        """Test ν = 1/2 gives exp(−r)."""
        r = np.array([0.1, 0.5, 2.0])
        np.testing.assert_allclose(matern_kernel(r, 0.5), np.exp(-r), rtol=1e-10)

    def test_kernel_decreasing(self):
        """Test the kernel decays with distance."""
        values = matern_kernel(np.linspace(0.0, 5.0, 20), 2.0)
        assert np.all(np.diff(values) < 0)

    def test_needs_s_above_half_dimension(self):
        """Test s ≤ d/2 raises ConfigError."""
        with pytest.raises(ConfigError):
            MaternSpec(s=1.0, axes=(np.linspace(0, 1, 5), np.linspace(0, 1, 5)))

    def test_lattice_size_limit(self):
        """Test oversized lattices raise ConfigError."""
        axis = np.linspace(0.0, 1.0, 65)
        with pytest.raises(ConfigError):
            MaternSpec(s=2.0, axes=(axis, axis))

    def test_lattice_spans_O0(self, regions):
        """Test the lattice covers the bounding box of O_0."""
        (axis,) = matern_lattice(regions, 9)
        lo, hi = regions.O_0.bounding_box
        assert axis[0] == pytest.approx(lo[0])
        assert axis[-1] == pytest.approx(hi[0])
        assert axis.size == 9

    def test_draw_covariance(self):
        """Test the empirical covariance of draws matches the kernel."""
        spec = MaternSpec(s=1.5, axes=(np.linspace(0.0, 1.0, 4),))
        prior = MaternPrior(spec)
        rng = np.random.default_rng(0)
        draws = np.array([prior.draw(rng) for _ in range(20000)])
        np.testing.assert_allclose(np.cov(draws.T), spec.covariance(), atol=0.05)

    def test_field_is_grid(self):
        """Test a draw is a GridField on the lattice, zero off it."""
        axis = np.linspace(1.0, 2.0, 5)
        field = sample_matern(MaternSpec(s=1.5, axes=(axis,)), seed=1)
        assert isinstance(field, GridField)
        assert field.evaluate([[3.0]])[0] == 0.0

    def test_evaluator_matches_field(self):
        """Test the cached evaluator agrees with field()."""
        prior = MaternPrior(MaternSpec(s=1.5, axes=(np.linspace(0.0, 1.0, 6),)))
        w = prior.draw(np.random.default_rng(2))
        points = np.array([[0.1], [0.55], [0.9]])
        np.testing.assert_allclose(prior.evaluator(points)(w), prior.field(w).evaluate(points))


class TestWaveletSeries:
    """Test the truncated wavelet-series prior."""

    def test_coefficient_moments(self, basis):
        """Test coefficients have variance 2^{−2ls} and no correlation across indices."""
        prior = WaveletSeriesPrior(WaveletPriorSpec(s=2.0, basis=basis))
        rng = np.random.default_rng(31)
        draws = np.array([prior.draw(rng) for _ in range(20000)])
        expected = 2.0 ** (-2.0 * 2.0 * basis.levels)
        np.testing.assert_allclose(draws.var(axis=0), expected, rtol=0.06)
        correlations = np.corrcoef(draws, rowvar=False)
        off_diagonal = correlations[~np.eye(basis.size, dtype=bool)]
        assert np.max(np.abs(off_diagonal)) < 0.05

    def test_scales(self, basis):
        """Test coefficients at level l are scaled by 2^{−ls}."""
        spec = WaveletPriorSpec(s=2.0, basis=basis)
        np.testing.assert_allclose(spec.scales, 2.0 ** (-2.0 * basis.levels))
        assert (spec.J0, spec.J) == (4, 5)

    def test_invalid_smoothness(self, basis):
        """Test s ≤ 0 raises ConfigError."""
        with pytest.raises(ConfigError):
            WaveletPriorSpec(s=0.0, basis=basis)

    def test_draw_reproducible(self, basis):
        """Test the same seed gives the same coefficients."""
        spec = WaveletPriorSpec(s=2.0, basis=basis)
        a = sample_wavelet_series(spec, seed=4)
        b = sample_wavelet_series(spec, seed=4)
        np.testing.assert_array_equal(a.values, b.values)
        assert isinstance(a, CoeffVector)

    def test_evaluator_matches_field(self, basis):
        """Test the design-matrix evaluator agrees with the expansion."""
        prior = WaveletSeriesPrior(WaveletPriorSpec(s=2.0, basis=basis))
        w = prior.draw(np.random.default_rng(5))
        points = np.linspace(1.0, 6.0, 11).reshape(-1, 1)
        np.testing.assert_allclose(
            prior.evaluator(points)(w), prior.field(w).evaluate(points), atol=1e-12
        )

    def test_field_vanishes_outside_O0_delta(self, basis):
        """Test V = 0 away from the wavelet supports."""
        prior = WaveletSeriesPrior(WaveletPriorSpec(s=2.0, basis=basis))
        field = prior.field(prior.draw(np.random.default_rng(6)))
        np.testing.assert_allclose(field.evaluate([[0.1], [6.9]]), 0.0)


class TestRkhsNorms:
    """Test RKHS norms of the truth under the wavelet-series prior."""

    def test_single_coefficient(self, basis):
        """Test ‖c ψ_lr‖ = 2^{ls} |c|, multiplied by the rescaling factor."""
        values = np.zeros(basis.size)
        index = int(np.flatnonzero(basis.levels == 5)[0])
        values[index] = 0.5
        norms = rkhs_norm(CoeffVector(basis, values), s=2.0, N=1024)
        assert norms["unscaled"] == pytest.approx(0.5 * 2.0**10)
        assert norms["rescaled"] == pytest.approx(2.0 * norms["unscaled"])

    def test_constant_truth(self, basis):
        """Test f0 ≡ 1 has w0 = 0 and zero norm."""
        report = truth_rkhs_report(basis, ConstantField(1.0, 1), 0.25, s=2.0, N=100)
        assert report["unscaled"] == pytest.approx(0.0, abs=1e-10)
        assert report["J"] == 5


class TestBuildPrior:
    """Test prior construction from a specification."""

    def test_dispatch(self, basis):
        """Test each specification gives its prior."""
        assert isinstance(build_prior(WaveletPriorSpec(s=2.0, basis=basis)), WaveletSeriesPrior)
        matern = build_prior(MaternSpec(s=1.5, axes=(np.linspace(0, 1, 4),)))
        assert isinstance(matern, MaternPrior)
        assert matern.size == 4

    def test_unknown(self):
        """Test anything else raises ConfigError."""
        with pytest.raises(ConfigError):
            build_prior("gaussian")
