"""Study interface, cell execution and the study registry.

A study splits into independent cells (N × replicate, ε × N, ...). Cells
run in a process pool when ``study.workers > 1``; every cell derives its
randomness from (study seed, cell key), so results do not depend on the
number of workers or on completion order.
"""

import functools
import logging
import time
from abc import ABC, abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Any, Callable, Dict, Hashable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..utils.errors import ConfigError, LabError
from ..utils.logger import log_cell_metrics
from ..utils.rng import make_rng
from .config import ExperimentConfig
from .context import StudyContext, build_context
from .results import StudyResult, append_csv, sha256_json, write_manifest

CellFunction = Callable[[StudyContext, Any], Dict[str, Any]]


def _run_guarded(
    cell: CellFunction, nan_fields: Sequence[str], context: StudyContext, key
) -> Dict[str, Any]:
    """Run one cell, turning a LabError into a record with NaN metrics."""
    started = time.perf_counter()
    try:
        record = cell(context, key)
        record.setdefault("error", "")
    except LabError as e:
        record = dict(key)
        record.update({name: float("nan") for name in nan_fields})
        record["error"] = f"{type(e).__name__}: {e}"
    record["runtime_s"] = time.perf_counter() - started
    return record


def run_cells(
    cell: CellFunction,
    context: StudyContext,
    keys: Sequence[Dict[str, Hashable]],
    nan_fields: Sequence[str],
    workers: int = 1,
) -> List[Dict[str, Any]]:
    """Evaluate ``cell`` on every key, in key order.

    Args:
        cell: Top-level (picklable) function of (context, key)
        context: Shared experiment objects
        keys: Cell keys
        nan_fields: Metrics set to NaN when a cell fails
        workers: Process count; 1 runs inline

    Returns:
        One record per key
    """
    logger = logging.getLogger(__name__)
    task = functools.partial(_run_guarded, cell, tuple(nan_fields), context)
    if workers <= 1:
        records = [task(key) for key in keys]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(task, keys))
    failed = [r for r in records if r.get("error")]
    for record in failed:
        logger.warning(f"Cell {record} failed")
    for record in records:
        log_cell_metrics(record)
    return records


class Study(ABC):
    """One experiment driver.

    Contract:
        - ``run`` depends only on the context (config and seed); rerunning
          reproduces every record bit for bit
        - failed cells appear as records with a non-empty ``error`` field
        - ``csv_name`` names the append-only records file in the output dir
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """Experiment kind handled by this study (e.g. "rate_study")."""
        pass

    @property
    @abstractmethod
    def csv_name(self) -> str:
        """File name of the records CSV."""
        pass

    @property
    @abstractmethod
    def columns(self) -> List[str]:
        """Column order of the records CSV."""
        pass

    @abstractmethod
    def run(self, context: StudyContext) -> StudyResult:
        """Run every cell and aggregate.

        Args:
            context: Shared experiment objects

        Returns:
            Records, per-N summary and slope fits
        """
        pass

    def bootstrap_rng(self, context: StudyContext) -> np.random.Generator:
        return make_rng(context.config.seed, 99)


class StudyRunner:
    """Registry of studies; runs one and writes its outputs.

    Attributes:
        studies: Registered studies by kind
    """

    def __init__(self):
        self.studies: Dict[str, Study] = {}
        self.logger = logging.getLogger(__name__)

    def register_study(self, study: Study) -> None:
        """Register a study instance.

        Args:
            study: The study to register
        """
        self.studies[study.name] = study
        self.logger.debug(f"Registered study: {study.name}")

    def run(self, config: ExperimentConfig, output_dir: Optional[str] = None) -> StudyResult:
        """Build the context, run the study and append its CSVs.

        Raises:
            ConfigError: If no study handles ``config.kind``
        """
        if config.kind not in self.studies:
            raise ConfigError(f"No study registered for kind '{config.kind}'")
        study = self.studies[config.kind]
        out = Path(output_dir or config.output_dir)
        out.mkdir(parents=True, exist_ok=True)

        started = time.perf_counter()
        context = build_context(config)
        setup_s = time.perf_counter() - started
        self.logger.info(f"Running {study.name} with seed {config.seed} into {out}")
        result = study.run(context)
        total_s = time.perf_counter() - started

        append_csv(result.records[study.columns], out / study.csv_name)
        if not result.summary.empty:
            append_csv(result.summary, out / study.csv_name.replace(".csv", "_summary.csv"))
        if result.fits:
            append_csv(result.fits_frame(), out / study.csv_name.replace(".csv", "_fits.csv"))
        extra: Dict[str, Any] = {"failed_cells": result.failed_cells}
        extra.update({f"slope:{name}": f"{fit.slope:.6f}" for name, fit in result.fits.items()})
        extra.update({f"info:{k}": v for k, v in result.info.items()})
        write_manifest(
            out / "manifest.csv",
            kind=config.kind,
            seed=config.seed,
            config_hash=sha256_json(_config_payload(config)),
            inputs=[p for p in (config.source,) if p],
            runtimes={"setup": setup_s, "total": total_s},
            extra=extra,
        )
        for name, fit in result.fits.items():
            self.logger.info(f"{study.name}: slope[{name}] = {fit.slope:.3f} ± {fit.stderr:.3f}")
        return result


def _config_payload(config: ExperimentConfig) -> Dict[str, Any]:
    payload = asdict(config)
    payload.pop("source", None)
    return payload


def records_frame(records: List[Dict[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    """Records as a frame with the study's column order (extra columns kept last)."""
    frame = pd.DataFrame(records)
    for column in columns:
        if column not in frame:
            frame[column] = np.nan
    extra = [c for c in frame.columns if c not in columns]
    return frame[list(columns) + extra]
