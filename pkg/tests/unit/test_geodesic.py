"""Unit tests for Riemannian distances under the metric f^{-1}·I."""

import numpy as np
import pytest

from src.likelihood.geodesic import (
    GeodesicSolverSpec,
    dijkstra_distance,
    exact_distance_1d,
    geodesic_distance,
    geodesic_expansion,
    path_energy,
)
from src.models.fields import BumpField, ConstantField


class TestConstantMetric:
    """Test distances for f constant, where ℓ = |y − x| / √f."""

    def test_energy_of_straight_path(self):
        """Test the straight path has energy |y − x|² / f."""
        knots = np.linspace(0.0, 1.0, 11).reshape(-1, 1)
        energy, grad = path_energy(ConstantField(4.0, 1), knots)
        assert energy == pytest.approx(0.25)
        np.testing.assert_allclose(grad[1:-1], 0.0, atol=1e-12)

    def test_geodesic(self):
        """Test energy minimization in 2D."""
        assert geodesic_distance(ConstantField(4.0, 2), [0.0, 0.0], [0.3, 0.4]) == pytest.approx(0.25)

    def test_same_point(self):
        """Test ℓ(x, x) = 0."""
        assert geodesic_distance(ConstantField(1.0, 2), [0.1, 0.1], [0.1, 0.1]) == 0.0

    def test_dijkstra_1d(self):
        """Test the lattice distance is exact in 1D."""
        assert dijkstra_distance(ConstantField(4.0, 1), [0.2], [0.8]) == pytest.approx(0.3)

    def test_exact_1d(self):
        """Test the 1D integral."""
        assert exact_distance_1d(ConstantField(4.0, 1), 0.8, 0.2) == pytest.approx(0.3)

    def test_expansion(self):
        """Test the expansion is exact for constant f."""
        assert geodesic_expansion(ConstantField(1.0, 1), [0.25], [0.75]) == pytest.approx(0.25)


class TestVariableMetric:
    """Test the three distance evaluations agree for a bump."""

    @pytest.fixture
    def bump_1d(self):
        return BumpField(center=(0.5,), widths=(0.3,), amplitude=0.8)

    @pytest.fixture
    def bump_2d(self):
        return BumpField(center=(0.5, 0.5), widths=(0.3, 0.3), amplitude=0.8)

    def test_energy_matches_exact_1d(self, bump_1d):
        """Test energy minimization against the 1D integral."""
        exact = exact_distance_1d(bump_1d, 0.3, 0.7)
        assert geodesic_distance(bump_1d, [0.3], [0.7]) == pytest.approx(exact, rel=1e-3)

    def test_dijkstra_matches_exact_1d(self, bump_1d):
        """Test the lattice distance against the 1D integral."""
        exact = exact_distance_1d(bump_1d, 0.3, 0.7)
        assert dijkstra_distance(bump_1d, [0.3], [0.7], lattice=2000) == pytest.approx(exact, rel=1e-3)

    def test_dijkstra_matches_energy_2d(self, bump_2d):
        """Test the two methods agree in 2D within the lattice accuracy."""
        x, y = [0.3, 0.35], [0.7, 0.6]
        smooth = geodesic_distance(bump_2d, x, y)
        lattice = dijkstra_distance(bump_2d, x, y, lattice=80)
        assert lattice == pytest.approx(smooth, rel=0.03)
        assert lattice >= smooth * (1 - 1e-3)

    def test_expansion_small_distance(self, bump_1d):
        """Test the two-term expansion of ℓ² for nearby points."""
        exact = exact_distance_1d(bump_1d, 0.42, 0.45) ** 2
        assert geodesic_expansion(bump_1d, [0.42], [0.45]) == pytest.approx(exact, rel=1e-3)

    def test_symmetry(self, bump_2d):
        """Test ℓ(x, y) = ℓ(y, x)."""
        x, y = [0.3, 0.4], [0.6, 0.65]
        assert geodesic_distance(bump_2d, x, y) == pytest.approx(
            geodesic_distance(bump_2d, y, x), rel=1e-6
        )

    def test_solver_spec_validation(self):
        """Test path_points < 2 raises ValueError."""
        with pytest.raises(ValueError):
            GeodesicSolverSpec(path_points=1)
