"""Unit tests for diffusivity fields and the truth library."""

import json

import numpy as np
import pytest

from src.geometry.domain import DomainSpec
from src.geometry.regions import build_nested_regions
from src.models.fields import (
    BumpField,
    ConstantField,
    GridField,
    PerturbedField,
    SumOfBumps,
    TruncatedField,
    bump_profile,
)
from src.models.truth_library import (
    TruthDefinition,
    TruthLibrary,
    build_truth,
    k_bump,
    truth_from_config,
)
from src.utils.errors import ConfigError, MembershipError


@pytest.fixture
def regions():
    return build_nested_regions(DomainSpec.hyperrectangle((0.0,), (7.0,)), 0.875)


class TestBumpField:
    """Test the smooth bump and its derivatives."""

    def test_profile_peak_and_support(self):
        """Test b(0) = 1 and b = 0 for |t| >= 1."""
        values = bump_profile(np.array([0.0, 1.0, -1.5]))
        np.testing.assert_allclose(values, [1.0, 0.0, 0.0])

    def test_profile_derivative_matches_finite_difference(self):
        """Test the analytic first derivative."""
        t = np.linspace(-0.9, 0.9, 19)
        h = 1e-6
        numeric = (bump_profile(t + h) - bump_profile(t - h)) / (2 * h)
        np.testing.assert_allclose(bump_profile(t, 1), numeric, atol=1e-6)

    def test_evaluate(self):
        """Test base plus amplitude at the center and base away from it."""
        f = BumpField(center=(0.5, 0.5), widths=(0.2, 0.2), amplitude=0.5)
        np.testing.assert_allclose(f.evaluate([[0.5, 0.5], [0.0, 0.0]]), [1.5, 1.0])

    def test_gradient_matches_finite_difference(self):
        """Test the analytic gradient against central differences."""
        f = BumpField(center=(0.5, 0.5), widths=(0.3, 0.2), amplitude=-0.4)
        x = np.array([[0.45, 0.52], [0.6, 0.4]])
        h = 1e-6
        numeric = np.stack(
            [(f.evaluate(x + h * e) - f.evaluate(x - h * e)) / (2 * h) for e in np.eye(2)],
            axis=1,
        )
        np.testing.assert_allclose(f.gradient(x), numeric, atol=1e-6)

    def test_lower_bound(self):
        """Test f_min for a negative bump."""
        f = BumpField(center=(0.5,), widths=(0.2,), amplitude=-0.4)
        assert f.f_min == pytest.approx(0.6)
        assert f.sup_bound == pytest.approx(1.0)

    def test_invalid_width(self):
        """Test that non-positive widths raise ValueError."""
        with pytest.raises(ValueError):
            BumpField(center=(0.5,), widths=(0.0,), amplitude=0.1)

    def test_holder_bound_increases_with_s(self):
        """Test the C^s bound is monotone in s."""
        f = BumpField(center=(0.5,), widths=(0.2,), amplitude=0.5)
        assert f.holder_bound(1.0) < f.holder_bound(2.5) < f.holder_bound(4.0)


class TestOtherFields:
    """Test constant, sum, grid, truncated and perturbed fields."""

    def test_constant(self):
        """Test a constant field and its zero gradient."""
        f = ConstantField(1.5, 2)
        np.testing.assert_allclose(f.evaluate(np.zeros((3, 2))), 1.5)
        np.testing.assert_allclose(f.gradient(np.zeros((3, 2))), 0.0)
        assert f.f_min == 1.5

    def test_sum_of_bumps(self):
        """Test bump perturbations add on top of the base."""
        a = BumpField(center=(0.3,), widths=(0.1,), amplitude=0.6, base=0.0)
        b = BumpField(center=(0.7,), widths=(0.1,), amplitude=-0.3, base=0.0)
        f = SumOfBumps(bumps=(a, b))
        np.testing.assert_allclose(f.evaluate([[0.3], [0.7], [0.5]]), [1.6, 0.7, 1.0])
        assert f.f_min == pytest.approx(0.7)

    def test_grid_interpolation(self):
        """Test linear interpolation and the fill value."""
        axes = (np.array([0.0, 1.0]),)
        f = GridField(axes=axes, values=np.array([1.0, 3.0]))
        np.testing.assert_allclose(f.evaluate([[0.5], [2.0]]), [2.0, 0.0])

    def test_truncation(self):
        """Test min(f, M)_+."""
        f = TruncatedField(GridField(axes=(np.array([0.0, 1.0]),), values=np.array([-1.0, 5.0])), 2.0)
        np.testing.assert_allclose(f.evaluate([[0.0], [1.0]]), [0.0, 2.0])

    def test_perturbation(self):
        """Test f0 + ε h."""
        h = BumpField(center=(0.5,), widths=(0.2,), amplitude=1.0, base=0.0)
        f = PerturbedField(ConstantField(1.0, 1), h, 0.1)
        np.testing.assert_allclose(f.evaluate([[0.5]]), [1.1])
        assert f.sup_bound == pytest.approx(1.1)


class TestTruthLibrary:
    """Test truth presets and their construction."""

    def test_definition_validation(self):
        """Test unknown families and missing parameters raise ConfigError."""
        with pytest.raises(ConfigError):
            TruthDefinition(name="x", family="spline")
        with pytest.raises(ConfigError):
            TruthDefinition(name="x", family="bump", params={})

    def test_load_from_json(self, tmp_path):
        """Test presets load from a JSON array."""
        path = tmp_path / "truths.json"
        path.write_text(json.dumps([{"name": "one", "family": "constant", "params": {"value": 1.0}}]))
        library = TruthLibrary()
        library.load_from_json(str(path))
        assert library.list_truths() == ["one"]
        with pytest.raises(ConfigError):
            library.get("two")

    def test_missing_file(self, tmp_path):
        """Test a missing library raises ConfigError."""
        with pytest.raises(ConfigError):
            TruthLibrary().load_from_json(str(tmp_path / "nope.json"))

    def test_not_an_array(self, tmp_path):
        """Test a JSON object is rejected."""
        path = tmp_path / "truths.json"
        path.write_text("{}")
        with pytest.raises(ConfigError):
            TruthLibrary().load_from_json(str(path))

    def test_bump_lives_in_K(self, regions):
        """Test a preset bump equals 1 outside K."""
        definition = TruthDefinition(name="b", family="bump", params={"amplitude": 0.5})
        f = build_truth(definition, regions)
        outside = np.array([[0.5], [2.6], [4.4], [6.9]])
        np.testing.assert_allclose(f.evaluate(outside), 1.0)
        assert f.evaluate([[3.5]])[0] == pytest.approx(1.5)

    def test_bump_leaving_K(self, regions):
        """Test offsets that push the support out of K are rejected."""
        definition = TruthDefinition(
            name="b", family="bump", params={"amplitude": 0.5, "center_fraction": 0.5}
        )
        with pytest.raises(MembershipError):
            build_truth(definition, regions)

    def test_lower_bound_check(self, regions):
        """Test inf f >= 2 f_min is enforced when requested."""
        definition = TruthDefinition(name="d", family="bump", params={"amplitude": -0.6})
        with pytest.raises(MembershipError):
            build_truth(definition, regions, f_min=0.25)

    def test_inline_truth(self, regions):
        """Test inline definitions resolve without a library."""
        f = truth_from_config({"family": "constant", "params": {"value": 1.0}}, regions)
        assert f.evaluate([[1.0]])[0] == 1.0

    def test_preset_without_library(self, regions):
        """Test a preset needs a loaded library."""
        with pytest.raises(ConfigError):
            truth_from_config({"preset": "mild_bump"}, regions)

    def test_k_bump(self, regions):
        """Test the zero-based perturbation direction."""
        h = k_bump(regions, width_fraction=0.8)
        assert h.evaluate([[3.5]])[0] == pytest.approx(1.0)
        assert h.evaluate([[1.0]])[0] == 0.0
