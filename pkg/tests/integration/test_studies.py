"""End-to-end runs of each study on small grids."""

import numpy as np
import pandas as pd
import pytest

from src.estimation.estimator import estimate_f, l2_error
from src.harness.assouad_study import AssouadStudy, run_assouad_study
from src.harness.config import config_from_dict
from src.harness.context import build_context, estimator_level, simulate_observations
from src.harness.kl_sweep import KLSweep, run_kl_sweep
from src.harness.posterior_study import PosteriorStudy, run_posterior_study
from src.harness.rate_study import RateStudy, run_rate_study
from src.harness.study import StudyRunner
from src.wavelets.basis import build_basis

pytestmark = [pytest.mark.integration, pytest.mark.slow]

DOMAIN = {"lower": [0.0], "upper": [7.0], "delta": 0.875}


def _config(kind, **sections):
    data = {
        "kind": kind,
        "seed": 11,
        "domain": DOMAIN,
        "truth": {"preset": "mild_bump"},
        "rate": {"d": 1, "a": 0.6, "s": 2.0, "N_grid": [512, 1024, 2048]},
        "estimator": {"wavelet_order": 4, "J_scale": 4.0},
        "study": {"replicates": 2, "bootstrap": 10},
    }
    data.update(sections)
    return config_from_dict(data)


@pytest.fixture
def runner():
    runner = StudyRunner()
    for study in (RateStudy(), AssouadStudy(), PosteriorStudy(), KLSweep()):
        runner.register_study(study)
    return runner


class TestPipeline:
    """Test simulate → estimate → error without the study machinery."""

    def test_error_shrinks_with_N(self):
        """Test the estimate at large N beats a flat guess."""
        context = build_context(_config("simulate"))
        N = 8192
        obs = simulate_observations(context, N, seed=1)
        J = estimator_level(context, N)
        basis = build_basis(context.family, context.regions, J0=context.J0, J=J)
        output = estimate_f(obs, basis, M=context.M)
        error = l2_error(output.f_hat_star, context.truth, context.domain, level=J)
        flat = l2_error(1.0, context.truth, context.domain, level=J)
        assert np.isfinite(error)
        assert error < flat


class TestStudies:
    """Test each study writes its records, fits and manifest."""

    def test_rate_study(self, runner, tmp_path):
        """Test the rate study and its append-only outputs."""
        config = _config("rate_study")
        result = runner.run(config, output_dir=str(tmp_path))
        assert len(result.records) == 6
        assert result.failed_cells == 0
        assert "l2_error" in result.fits
        assert result.summary["B_N_frequency"].between(0.0, 1.0).all()
        assert np.isfinite(result.fits["l2_error"].slope)

        records = pd.read_csv(tmp_path / "rate_study.csv")
        assert list(records.columns) == RateStudy().columns
        manifest = pd.read_csv(tmp_path / "manifest.csv", dtype=str)
        assert "slope:l2_error" in set(manifest["key"])

        runner.run(config, output_dir=str(tmp_path))
        assert len(pd.read_csv(tmp_path / "rate_study.csv")) == 12

    def test_rate_study_reproducible(self, runner, tmp_path):
        """Test the same seed reproduces every metric without the runner too."""
        config = _config("rate_study", study={"replicates": 1, "bootstrap": 0})
        first = runner.run(config, output_dir=str(tmp_path)).records
        second = run_rate_study(config).records
        np.testing.assert_array_equal(first["l2_error"].to_numpy(), second["l2_error"].to_numpy())

    def test_assouad_study(self):
        """Test per-N worst risk and the lower bound."""
        config = _config(
            "assouad_study",
            truth={"preset": "constant_one"},
            study={"replicates": 1, "corners": 2, "J_scale": 4.0, "bootstrap": 10},
        )
        result = run_assouad_study(config)
        assert len(result.records) == 6
        assert list(result.summary["N"]) == [512, 1024, 2048]
        assert (result.summary["worst_risk"] >= result.summary["mean_risk"]).all()
        assert (result.summary["lower_bound"] > 0).all()

    def test_posterior_study(self):
        """Test posterior errors and contraction fractions per cell."""
        config = _config(
            "posterior_study",
            rate={"d": 1, "a": 0.6, "s": 2.0, "N_grid": [256, 512, 1024]},
            prior={"iters": 60, "burn_in": 30, "thin": 3, "grid_points_per_unit": 4.0},
            study={"replicates": 1, "bootstrap": 5},
        )
        result = run_posterior_study(config)
        assert result.failed_cells == 0
        assert result.records["contraction"].between(0.0, 1.0).all()
        assert result.records["acceptance"].between(0.0, 1.0).all()
        assert "lsq_ratio" in result.summary

    def test_kl_sweep(self, runner, tmp_path):
        """Test the grid runs and the variance slope is fitted."""
        config = _config(
            "kl_sweep",
            domain={"lower": [0.0], "upper": [1.0], "delta": 0.1},
            kl={
                "epsilons": [0.4, 0.2, 0.1],
                "N_grid": [4, 8, 16],
                "D": 0.001,
                "n_mc": 200,
                "n_paths": 40,
            },
        )
        result = runner.run(config, output_dir=str(tmp_path))
        assert len(result.records) == 9
        assert len(result.summary) == 3
        assert "var_vs_N@0.4" in result.fits
        assert np.isfinite(result.records["mean_per_transition"]).all()
        direct = run_kl_sweep(config).records["mean_per_transition"].to_numpy()
        np.testing.assert_allclose(direct, result.records["mean_per_transition"].to_numpy())
