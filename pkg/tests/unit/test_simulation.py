"""Unit tests for the reflected-diffusion simulator and path diagnostics."""

import numpy as np
import pytest

from src.geometry.domain import DomainSpec
from src.geometry.regions import build_nested_regions
from src.models.fields import BumpField, ConstantField, GridField
from src.simulation.config import DriftMode, GenericDrift, ObservationSet, SdeConfig
from src.simulation.diagnostics import (
    effective_sample_size,
    occupation_histogram,
    uniformity_check,
)
from src.simulation.io import read_observations, sidecar_path, write_observations
from src.simulation.simulator import (
    boundary_hit_frequency,
    hitting_bound,
    increments_Y,
    initial_draw,
    sample_path,
    simulate_paths,
    simulate_transitions,
)
from src.utils.errors import ConfigError, DomainError, NumericalError
from src.utils.rng import make_rng


@pytest.fixture
def regions():
    return build_nested_regions(DomainSpec.unit_cube(1), 0.1)


def _config(regions, f=None, **kwargs):
    f = f if f is not None else ConstantField(1.0, regions.domain.dim)
    defaults = {"D": 1e-3, "N": 200, "seed": 7}
    defaults.update(kwargs)
    return SdeConfig(f=f, regions=regions, **defaults)


class TestSdeConfig:
    """Test settings validation and the substep rule."""

    def test_substep_rule(self, regions):
        """Test m = ceil(D / dt_max) with dt_max = (δ/10)²/(2‖f‖∞)."""
        config = _config(regions, D=1e-3)
        dt_max = (0.01) ** 2 / 2.0
        assert config.substep_count == 20
        assert config.dt <= dt_max * (1 + 1e-12)

    def test_substep_override(self, regions):
        """Test an explicit substep count wins."""
        assert _config(regions, substeps=3).substep_count == 3

    def test_invalid_D(self, regions):
        """Test D <= 0 raises ConfigError."""
        with pytest.raises(ConfigError):
            _config(regions, D=0.0)

    def test_generic_needs_drift(self, regions):
        """Test generic mode without a drift raises ConfigError."""
        with pytest.raises(ConfigError):
            _config(regions, drift_mode=DriftMode.GENERIC)

    def test_dimension_mismatch(self, regions):
        """Test a 2D field on a 1D domain is rejected."""
        with pytest.raises(ConfigError):
            _config(regions, f=ConstantField(1.0, 2))

    def test_regime_report(self, regions):
        """Test N·D and N·D² in the regime report."""
        report = _config(regions, D=1e-3, N=200).regime_report(spectral_rate=2.0)
        assert report["ND"] == pytest.approx(0.2)
        assert report["ND2"] == pytest.approx(2e-4)
        assert report["spectral_gap_rD"] == pytest.approx(2e-3)


class TestSimulator:
    """Test paths and transitions."""

    def test_path_stays_in_domain(self, regions):
        """Test every observed state lies in the closure of O."""
        obs = sample_path(_config(regions))
        assert obs.points.shape == (201, 1)
        assert np.all(regions.domain.contains(obs.points))

    def test_reproducible(self, regions):
        """Test the same seed gives the same path."""
        a = sample_path(_config(regions)).points
        b = sample_path(_config(regions)).points
        np.testing.assert_array_equal(a, b)

    def test_path_independent_of_batch(self, regions):
        """Test path k does not depend on how many paths run alongside it."""
        config = _config(regions, N=50)
        batch = simulate_paths(config, n_paths=3)
        alone = simulate_paths(config, n_paths=1, first_path=2)[0]
        np.testing.assert_array_equal(batch[2].points, alone.points)

    def test_ball_domain(self):
        """Test simulation in a 2D ball stays inside it."""
        regions = build_nested_regions(DomainSpec.ball((0.0, 0.0), 1.0), 0.1)
        obs = sample_path(SdeConfig(f=ConstantField(1.0, 2), regions=regions, D=1e-3, N=100))
        assert np.all(regions.domain.contains(obs.points, tol=1e-12))

    def test_initial_draw_in_ball(self):
        """Test initial states are reproducible and fall inside a ball."""
        ball = DomainSpec.ball((0.0, 0.0), 1.0)
        first = initial_draw(ball, make_rng(5, 0, 0))
        again = initial_draw(ball, make_rng(5, 0, 0))
        np.testing.assert_array_equal(first, again)
        assert first.shape == (2,)
        assert np.linalg.norm(first) <= 1.0

    def test_non_positive_diffusivity(self, regions):
        """Test f <= 0 on the path raises NumericalError."""
        f = GridField(axes=(np.array([0.0, 1.0]),), values=np.array([-1.0, -1.0]))
        config = SdeConfig(f=f, regions=regions, D=1e-3, N=5, substeps=1)
        with pytest.raises(NumericalError):
            sample_path(config)

    def test_generic_drift(self, regions):
        """Test a linear nuisance drift runs."""
        drift = GenericDrift(kind="linear", kappa=1.0, center=(0.5,))
        config = _config(regions, drift_mode="generic", drift=drift, N=20)
        assert sample_path(config).N == 20

    def test_increment_mean_constant_f(self, regions):
        """Test E[Y] ≈ f away from the boundary for f ≡ 1.5."""
        config = _config(regions, f=ConstantField(1.5, 1), D=1e-4, drift_mode="none")
        starts = np.full((20000, 1), 0.5)
        ends, hits = simulate_transitions(config, starts)
        Y = np.sum((ends - starts) ** 2, axis=1) / (2 * config.D)
        assert not np.any(hits)
        assert np.mean(Y) == pytest.approx(1.5, rel=0.05)

    def test_increment_bias_shrinks_with_D(self, regions):
        """Test E[Y] − f(x) at the top of a bump shrinks as D decreases."""
        f = BumpField(center=(0.5,), widths=(0.3,), amplitude=0.5)
        starts = np.full((40000, 1), 0.5)
        bias = {}
        for D in (1e-2, 1e-3):
            ends, _ = simulate_transitions(_config(regions, f=f, D=D), starts)
            Y = np.sum((ends - starts) ** 2, axis=1) / (2 * D)
            bias[D] = float(np.mean(Y)) - 1.5
        assert bias[1e-2] < -0.1
        assert abs(bias[1e-3]) < 0.06
        assert abs(bias[1e-3]) < abs(bias[1e-2])

    def test_increments_Y(self):
        """Test Y_i = |ΔX|²/(2dD)."""
        obs = ObservationSet(points=np.array([[0.30], [0.32], [0.32]]), D=0.01)
        np.testing.assert_allclose(increments_Y(obs), [0.02, 0.0], atol=1e-12)

    def test_boundary_hits_rare_from_interior(self, regions):
        """Test transitions from O_0^δ seldom reach ∂O within D."""
        config = _config(regions, D=1e-4)
        frequency = boundary_hit_frequency(config, regions.O_0_delta, n_replicates=2000)
        assert frequency <= hitting_bound(1, 0.1, 1.0, 1e-4) + 0.01

    def test_hitting_bound(self):
        """Test the closed form 2d exp(−δ²/(20 d ‖f‖∞ D))."""
        assert hitting_bound(1, 0.1, 1.0, 0.0005) == pytest.approx(2 * np.exp(-1.0))
        with pytest.raises(ValueError):
            hitting_bound(1, 0.0, 1.0, 0.001)

    @pytest.mark.slow
    def test_occupation_is_uniform(self, regions):
        """Test the gradient-drift diffusion keeps the uniform law."""
        f = BumpField(center=(0.5,), widths=(0.2,), amplitude=0.5)
        config = _config(regions, f=f, D=2e-3, N=20000)
        obs = sample_path(config)
        report = uniformity_check(occupation_histogram(obs, 10), regions.domain)
        assert report.passed


class TestObservationSet:
    """Test the observation container and its CSV form."""

    def test_rejects_points_outside(self):
        """Test states outside the domain raise DomainError."""
        with pytest.raises(DomainError):
            ObservationSet(points=np.array([[0.5], [1.5]]), D=0.1, domain=DomainSpec.unit_cube(1))

    def test_csv_round_trip(self, regions, tmp_path):
        """Test write and read keep states, D and the domain."""
        obs = sample_path(_config(regions, N=30))
        path = tmp_path / "observations.csv"
        meta = write_observations(obs, path, extra={"delta": 0.1})
        assert meta == sidecar_path(path)
        restored = read_observations(path)
        np.testing.assert_allclose(restored.points, obs.points)
        assert restored.D == obs.D
        assert restored.domain == regions.domain
        assert restored.metadata["delta"] == 0.1

    def test_missing_file(self, tmp_path):
        """Test reading a missing file raises ConfigError."""
        with pytest.raises(ConfigError):
            read_observations(tmp_path / "none.csv")


class TestDiagnostics:
    """Test effective sample size and histograms."""

    def test_ess_of_alternating_series(self):
        """Test an anticorrelated series is clipped to n."""
        assert effective_sample_size(np.arange(4.0) % 2) == 4.0

    def test_ess_of_persistent_series(self):
        """Test a random walk has a small ESS."""
        walk = np.cumsum(np.random.default_rng(0).normal(size=4000))
        assert effective_sample_size(walk) < 400

    def test_histogram_sums_to_one(self, regions):
        """Test histogram normalization."""
        diagnostics = occupation_histogram(sample_path(_config(regions, N=100)), 5)
        assert diagnostics.histogram.sum() == pytest.approx(1.0)
        assert len(diagnostics.edges) == 1
