"""Unit tests for study records, slope fits and CSV output."""

import numpy as np
import pandas as pd
import pytest

from src.harness.results import (
    StudyResult,
    append_csv,
    fit_loglog_slope,
    sha256_json,
    summarize_by_N,
    write_manifest,
)
from src.utils.errors import ConfigError


def _power_law(exponent=-0.4, replicates=5, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for N in (256, 512, 1024, 2048):
        for r in range(replicates):
            value = 3.0 * N**exponent * np.exp(noise * rng.normal())
            rows.append({"N": N, "replicate": r, "l2_error": value})
    return pd.DataFrame(rows)


class TestSlopeFit:
    """Test log-log slope fitting."""

    def test_exact_power_law(self):
        """Test an exact power law gives its exponent with zero spread."""
        fit = fit_loglog_slope(_power_law(), "l2_error", bootstrap=20)
        assert fit.slope == pytest.approx(-0.4)
        assert fit.intercept == pytest.approx(np.log(3.0))
        assert fit.stderr == pytest.approx(0.0, abs=1e-12)
        assert fit.n_points == 4

    def test_noisy_power_law(self):
        """Test a noisy power law gives a slope within a few standard errors."""
        fit = fit_loglog_slope(_power_law(noise=0.1, replicates=30), "l2_error", bootstrap=100)
        assert fit.stderr > 0
        assert abs(fit.slope + 0.4) < 5 * fit.stderr + 0.02

    def test_failed_cells_ignored(self):
        """Test NaN metrics do not enter the fit."""
        frame = _power_law()
        frame.loc[0, "l2_error"] = np.nan
        assert fit_loglog_slope(frame, "l2_error", bootstrap=5).slope == pytest.approx(-0.4)

    def test_too_few_points(self):
        """Test fewer than three distinct N values raise ValueError."""
        frame = _power_law()
        with pytest.raises(ValueError):
            fit_loglog_slope(frame[frame["N"] <= 512], "l2_error")

    def test_reproducible_bootstrap(self):
        """Test the bootstrap is deterministic for a given generator seed."""
        frame = _power_law(noise=0.2)
        a = fit_loglog_slope(frame, "l2_error", bootstrap=50, rng=np.random.default_rng(3))
        b = fit_loglog_slope(frame, "l2_error", bootstrap=50, rng=np.random.default_rng(3))
        assert a == b


class TestCsvOutput:
    """Test append-only CSV files."""

    def test_append(self, tmp_path):
        """Test a second append adds rows without a header."""
        path = tmp_path / "out" / "records.csv"
        frame = pd.DataFrame({"N": [1, 2], "value": [0.5, 0.25]})
        append_csv(frame, path)
        append_csv(frame, path)
        restored = pd.read_csv(path)
        assert len(restored) == 4
        assert list(restored.columns) == ["N", "value"]

    def test_column_mismatch(self, tmp_path):
        """Test appending different columns raises ConfigError."""
        path = tmp_path / "records.csv"
        append_csv(pd.DataFrame({"N": [1]}), path)
        with pytest.raises(ConfigError):
            append_csv(pd.DataFrame({"M": [1]}), path)

    def test_manifest(self, tmp_path):
        """Test manifest rows are key,value pairs including input hashes."""
        source = tmp_path / "config.json"
        source.write_text("{}")
        path = tmp_path / "manifest.csv"
        write_manifest(
            path,
            kind="rate_study",
            seed=5,
            config_hash=sha256_json({"a": 1}),
            inputs=[source],
            runtimes={"total": 1.5},
            extra={"failed_cells": 0},
        )
        manifest = pd.read_csv(path, dtype=str).set_index("key")["value"]
        assert manifest["kind"] == "rate_study"
        assert manifest["seed"] == "5"
        assert len(manifest["input_sha256:config.json"]) == 64
        assert float(manifest["runtime_s:total"]) == 1.5

    def test_json_hash_canonical(self):
        """Test key order does not change the config hash."""
        assert sha256_json({"a": 1, "b": 2}) == sha256_json({"b": 2, "a": 1})


class TestSummaries:
    """Test per-N aggregation and study results."""

    def test_summarize_by_N(self):
        """Test medians and counts per N."""
        summary = summarize_by_N(_power_law(replicates=3), ["l2_error"])
        assert list(summary["N"]) == [256, 512, 1024, 2048]
        assert list(summary["cells"]) == [3, 3, 3, 3]
        assert summary["l2_error_median"].iloc[0] == pytest.approx(3.0 * 256**-0.4)

    def test_failed_cells(self):
        """Test failed cells are counted from the error column."""
        records = pd.DataFrame({"N": [1, 2, 3], "error": ["", "NumericalError: x", np.nan]})
        assert StudyResult(kind="rate_study", records=records).failed_cells == 1
        assert StudyResult(kind="rate_study", records=records[["N"]]).failed_cells == 0
