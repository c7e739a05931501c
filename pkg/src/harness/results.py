"""Study records, log-log slope fits and append-only CSV output."""

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats

from ..utils.constants import BOOTSTRAP_RESAMPLES, MIN_SLOPE_POINTS
from ..utils.errors import ConfigError
from ..utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class SlopeFit:
    """OLS fit of log median metric against log N.

    Attributes:
        metric: Column the fit was computed on
        slope: Fitted slope
        stderr: Replicate-bootstrap standard error of the slope
        intercept: Fitted intercept on the log scale
        n_points: Number of distinct N values
    """

    metric: str
    slope: float
    stderr: float
    intercept: float
    n_points: int

    def to_dict(self) -> Dict[str, float]:
        return {
            "metric": self.metric,
            "slope": self.slope,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "n_points": self.n_points,
        }


def _median_slope(frame: pd.DataFrame, x: str, metric: str):
    medians = frame.groupby(x)[metric].median()
    medians = medians[medians > 0]
    if medians.size < 2:
        return float("nan"), float("nan")
    fit = stats.linregress(np.log(medians.index.to_numpy(dtype=float)), np.log(medians.to_numpy()))
    return float(fit.slope), float(fit.intercept)


def fit_loglog_slope(
    records: pd.DataFrame,
    metric: str,
    x: str = "N",
    bootstrap: int = BOOTSTRAP_RESAMPLES,
    rng: Optional[np.random.Generator] = None,
) -> SlopeFit:
    """Slope of log median(metric) vs log x with a replicate bootstrap.

    Failed cells (NaN metric) are ignored. The bootstrap resamples the
    replicates within each x value and refits the median slope.

    Args:
        records: Per-cell records
        metric: Column holding the error metric
        x: Column holding the sample size (or another positive abscissa)
        bootstrap: Number of bootstrap resamples
        rng: Generator for the bootstrap; a fixed one when None

    Raises:
        ValueError: If fewer than MIN_SLOPE_POINTS distinct x values have data
    """
    clean = records[[x, metric]].dropna()
    clean = clean[clean[metric] > 0]
    n_points = int(clean[x].nunique())
    if n_points < MIN_SLOPE_POINTS:
        raise ValueError(
            f"Slope fit of '{metric}' needs at least {MIN_SLOPE_POINTS} distinct {x} values, "
            f"got {n_points}"
        )
    slope, intercept = _median_slope(clean, x, metric)

    rng = rng or np.random.default_rng(0)
    groups = [g[metric].to_numpy() for _, g in clean.groupby(x)]
    xs = np.array(sorted(clean[x].unique()), dtype=float)
    draws = []
    for _ in range(bootstrap):
        medians = np.array([np.median(rng.choice(g, size=g.size, replace=True)) for g in groups])
        draws.append(stats.linregress(np.log(xs), np.log(medians)).slope)
    stderr = float(np.std(draws, ddof=1)) if bootstrap > 1 else float("nan")
    logger.debug(f"Slope of {metric}: {slope:.3f} ± {stderr:.3f} over {n_points} points")
    return SlopeFit(
        metric=metric, slope=slope, stderr=stderr, intercept=intercept, n_points=n_points
    )


@dataclass
class StudyResult:
    """Records of one study run plus its fits.

    Attributes:
        kind: Study kind
        records: One row per cell
        summary: One row per N (medians, bounds, reference rates)
        fits: Slope fits keyed by metric
        info: Scalars reported alongside (levels, lower bounds, ...)
    """

    kind: str
    records: pd.DataFrame
    summary: pd.DataFrame = field(default_factory=pd.DataFrame)
    fits: Dict[str, SlopeFit] = field(default_factory=dict)
    info: Dict[str, float] = field(default_factory=dict)

    @property
    def failed_cells(self) -> int:
        if "error" not in self.records:
            return 0
        return int(self.records["error"].fillna("").astype(str).str.len().gt(0).sum())

    def to_frame(self) -> pd.DataFrame:
        return self.records.copy()

    def fits_frame(self) -> pd.DataFrame:
        return pd.DataFrame([fit.to_dict() for fit in self.fits.values()])


def append_csv(frame: pd.DataFrame, path: PathLike) -> None:
    """Append rows to a CSV, writing the header only for a new file.

    Raises:
        ConfigError: If an existing file has different columns
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.exists() and path.stat().st_size > 0:
        existing = list(pd.read_csv(path, nrows=0).columns)
        if existing != list(frame.columns):
            raise ConfigError(
                f"Cannot append to {path}: columns {existing} differ from {list(frame.columns)}"
            )
        frame.to_csv(path, mode="a", header=False, index=False, float_format="%.17g")
    else:
        frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Appended {len(frame)} row(s) to {path}")


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def sha256_json(data) -> str:
    """Hash of a JSON-serializable object in canonical form."""
    text = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(
    path: PathLike,
    kind: str,
    seed: int,
    config_hash: str,
    inputs: Iterable[PathLike] = (),
    runtimes: Optional[Dict[str, float]] = None,
    extra: Optional[Dict[str, object]] = None,
) -> None:
    """Append a ``key,value`` block describing one run.

    Args:
        path: Manifest CSV
        kind: Experiment kind
        seed: Study seed
        config_hash: sha256 of the effective configuration
        inputs: Input files whose content hashes are recorded
        runtimes: Wall-clock runtimes in seconds, keyed by stage
        extra: Further scalars (fitted slopes, failed cells)
    """
    rows = [
        ("run_utc", datetime.now(timezone.utc).isoformat(timespec="seconds")),
        ("kind", kind),
        ("seed", str(seed)),
        ("config_sha256", config_hash),
    ]
    for item in inputs:
        rows.append((f"input_sha256:{Path(item).name}", sha256_file(item)))
    for stage, seconds in (runtimes or {}).items():
        rows.append((f"runtime_s:{stage}", f"{seconds:.6f}"))
    for key, value in (extra or {}).items():
        rows.append((key, str(value)))
    append_csv(pd.DataFrame(rows, columns=["key", "value"]), path)


def summarize_by_N(records: pd.DataFrame, metrics: Sequence[str], x: str = "N") -> pd.DataFrame:
    """Median, mean and count of each metric per N."""
    grouped = records.groupby(x)
    parts = {}
    for metric in metrics:
        parts[f"{metric}_median"] = grouped[metric].median()
        parts[f"{metric}_mean"] = grouped[metric].mean()
    parts["cells"] = grouped.size()
    return pd.DataFrame(parts).reset_index()
