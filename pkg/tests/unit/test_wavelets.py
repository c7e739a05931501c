"""Unit tests for the Daubechies tables, bases and projections."""

import numpy as np
import pytest

from src.geometry.domain import DomainSpec
from src.geometry.regions import build_nested_regions
from src.models.fields import BumpField, ConstantField
from src.utils.errors import BasisError, MembershipError
from src.wavelets.basis import build_basis, level_is_feasible, minimal_feasible_level
from src.wavelets.family import build_family, default_order
from src.wavelets.projection import (
    CoeffVector,
    bar_project,
    besov_coeff_norms,
    gram_matrix,
    project,
    read_coefficients,
    synthesize,
    write_coefficients,
)


@pytest.fixture(scope="module")
def db4():
    return build_family(4)


@pytest.fixture(scope="module")
def regions_1d():
    return build_nested_regions(DomainSpec.hyperrectangle((0.0,), (7.0,)), 0.875)


class TestWaveletFamily:
    """Test tabulated φ and ψ."""

    def test_filter_normalization(self, db4):
        """Test the low-pass filter sums to √2."""
        assert db4.filter.sum() == pytest.approx(np.sqrt(2.0))
        assert db4.support_length == 7

    def test_partition_of_unity(self, db4):
        """Test Σ_k φ(x − k) = 1."""
        x = np.linspace(0.0, 1.0, 33)
        total = sum(db4.phi(x + k) for k in range(db4.support_length + 1))
        np.testing.assert_allclose(total, 1.0, atol=1e-8)

    def test_two_scale_relation(self, db4):
        """Test the tables satisfy the refinement equation."""
        assert db4.two_scale_residual() < 1e-10

    def test_unit_norm(self, db4):
        """Test ‖φ‖₂ ≈ 1 and ‖ψ‖₂ ≈ 1 on the table grid."""
        spacing = 2.0**-db4.table_resolution
        assert np.sum(db4.phi_table**2) * spacing == pytest.approx(1.0, abs=1e-3)
        assert np.sum(db4.psi_table**2) * spacing == pytest.approx(1.0, abs=1e-3)

    def test_wavelet_has_zero_mean(self, db4):
        """Test ∫ψ = 0."""
        spacing = 2.0**-db4.table_resolution
        assert abs(np.sum(db4.psi_table) * spacing) < 1e-6

    def test_zero_outside_support(self, db4):
        """Test φ vanishes outside [0, 2p − 1]."""
        np.testing.assert_array_equal(db4.phi(np.array([-0.5, 7.5])), 0.0)

    def test_unsupported_order(self):
        """Test that orders outside 2..10 raise BasisError."""
        with pytest.raises(BasisError):
            build_family(1)
        with pytest.raises(BasisError):
            build_family(11)

    def test_default_order(self):
        """Test the smoothness-based default order."""
        assert default_order(2.0) == 4
        assert default_order(7.5) == 6
        assert default_order(40.0) == 10


class TestBasis:
    """Test V_J bases adapted to O_0."""

    def test_minimal_level_is_feasible(self, db4, regions_1d):
        """Test the minimal J0 is feasible and J0 − 1 is not."""
        J0 = minimal_feasible_level(db4, regions_1d)
        assert J0 == 4
        assert level_is_feasible(db4, regions_1d, J0)
        assert not level_is_feasible(db4, regions_1d, J0 - 1)

    def test_infeasible_J0_names_minimal_level(self, db4, regions_1d):
        """Test BasisError carries the minimal feasible level."""
        with pytest.raises(BasisError) as excinfo:
            build_basis(db4, regions_1d, J0=2, J=4)
        assert excinfo.value.minimal_level == 4

    def test_J_below_J0(self, db4, regions_1d):
        """Test that J < J0 raises BasisError."""
        with pytest.raises(BasisError):
            build_basis(db4, regions_1d, J0=5, J=4)

    def test_supports_inside_O0_delta(self, db4, regions_1d):
        """Test every support meets O_0 and stays in O_0^δ."""
        basis = build_basis(db4, regions_1d, J0=4, J=5)
        lo_o0, hi_o0 = regions_1d.O_0.bounding_box
        lo_d, hi_d = regions_1d.O_0_delta.bounding_box
        for idx in basis.indices:
            lo, hi = idx.support(db4.support_length)
            assert hi[0] > lo_o0[0] and lo[0] < hi_o0[0]
            assert lo[0] >= lo_d[0] - 1e-12 and hi[0] <= hi_d[0] + 1e-12

    def test_level_counts(self, db4, regions_1d):
        """Test the coarse level carries φ and ψ and finer levels only ψ."""
        basis = build_basis(db4, regions_1d, J0=4, J=5)
        assert sum(basis.level_counts.values()) == basis.size
        coarse = [idx for idx in basis.indices if idx.level == 4]
        assert {idx.kind for idx in coarse} == {(0,), (1,)}
        fine = [idx for idx in basis.indices if idx.level == 5]
        assert {idx.kind for idx in fine} == {(1,)}

    def test_design_matrix_matches_evaluate(self, db4, regions_1d):
        """Test the sparse design agrees with pointwise evaluation."""
        basis = build_basis(db4, regions_1d, J0=4, J=5)
        x = np.linspace(1.0, 6.0, 37).reshape(-1, 1)
        design = basis.design_matrix(x).toarray()
        for k in (0, basis.size // 2, basis.size - 1):
            np.testing.assert_allclose(design[:, k], basis.evaluate(basis.indices[k], x))

    def test_gram_close_to_identity(self, db4, regions_1d):
        """Test quadrature orthonormality of the basis."""
        basis = build_basis(db4, regions_1d, J0=4, J=4)
        gram = gram_matrix(basis)
        np.testing.assert_allclose(gram, np.eye(basis.size), atol=2e-2)

    def test_two_dimensional_patterns(self, db4):
        """Test 2D coarse levels carry all four kind patterns."""
        regions = build_nested_regions(DomainSpec.hyperrectangle((0.0, 0.0), (7.0, 7.0)), 0.875)
        basis = build_basis(db4, regions, J0=4, J=4)
        assert {idx.label for idx in basis.indices} == {"ss", "sw", "ws", "ww"}


class TestProjection:
    """Test P_J, P̄_J and coefficient I/O."""

    @pytest.fixture
    def basis(self, db4, regions_1d):
        return build_basis(db4, regions_1d, J0=4, J=5)

    def test_projection_reproduces_members(self, basis):
        """Test P_J of a member of V_J is itself."""
        rng = np.random.default_rng(0)
        coeffs = CoeffVector(basis, rng.normal(size=basis.size) * 0.1)
        projected = project(basis, lambda x: synthesize(coeffs, x))
        np.testing.assert_allclose(projected.values, coeffs.values, atol=2e-2)

    def test_bar_projection_of_constant(self, basis, regions_1d):
        """Test P̄_J 1 = 1."""
        field = bar_project(basis, ConstantField(1.0, 1))
        x = np.linspace(0.0, 7.0, 50).reshape(-1, 1)
        np.testing.assert_allclose(field.evaluate(x), 1.0, atol=1e-12)

    def test_bar_projection_approximates_bump(self, basis, regions_1d):
        """Test P̄_J f is close to a smooth f in K."""
        f = BumpField(center=(3.5,), widths=(0.8,), amplitude=0.5)
        approx = bar_project(basis, f)
        x = np.linspace(2.7, 4.3, 40).reshape(-1, 1)
        assert np.max(np.abs(approx.evaluate(x) - f.evaluate(x))) < 0.05

    def test_boundary_value_violation(self, basis):
        """Test P̄_J rejects fields that are not 1 outside O_0."""
        with pytest.raises(MembershipError):
            bar_project(basis, ConstantField(2.0, 1))

    def test_besov_norm_of_zero(self, basis):
        """Test the Besov coefficient norm of zero."""
        assert besov_coeff_norms(CoeffVector(basis, np.zeros(basis.size)), 2.0) == 0.0

    def test_besov_norm_weights_levels(self, basis):
        """Test the Besov weight 2^{l(s + d/2)}."""
        values = np.zeros(basis.size)
        values[-1] = 1.0
        norm = besov_coeff_norms(CoeffVector(basis, values), 2.0)
        assert norm == pytest.approx(2.0 ** (5 * 2.5))

    def test_coefficient_csv(self, basis, tmp_path):
        """Test coefficients written to CSV are read back onto the basis."""
        coeffs = CoeffVector(basis, np.arange(basis.size, dtype=float))
        path = tmp_path / "coefficients.csv"
        write_coefficients(coeffs, path)
        restored = read_coefficients(path, basis)
        np.testing.assert_array_equal(restored.values, coeffs.values)

    def test_length_mismatch(self, basis):
        """Test CoeffVector rejects misaligned values."""
        with pytest.raises(ValueError):
            CoeffVector(basis, np.zeros(basis.size + 1))
