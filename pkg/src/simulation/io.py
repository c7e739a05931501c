"""Observation CSV files and their JSON metadata sidecars.

CSV header: ``i,t,x1,...,xd``. The sidecar ``<stem>.meta.json`` holds D, N,
seed, the truth description and the domain.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from ..geometry.domain import DomainSpec
from ..utils.errors import ConfigError
from ..utils.logger import get_logger
from .config import ObservationSet

logger = get_logger(__name__)

PathLike = Union[str, Path]


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.meta.json")


def write_observations(
    obs: ObservationSet, path: PathLike, extra: Optional[Dict[str, Any]] = None
) -> Path:
    """Write the observation CSV and its sidecar.

    Args:
        obs: Observations
        path: CSV destination
        extra: Additional sidecar entries (e.g. truth description, delta)

    Returns:
        Path of the sidecar
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(obs.points, columns=[f"x{j + 1}" for j in range(obs.dim)])
    frame.insert(0, "t", obs.times)
    frame.insert(0, "i", np.arange(obs.points.shape[0]))
    frame.to_csv(path, index=False, float_format="%.17g")

    meta: Dict[str, Any] = {
        "D": obs.D,
        "N": obs.N,
        "seed": obs.seed,
        "f_truth_id": obs.f_truth_id,
        "domain": obs.domain.to_dict() if obs.domain is not None else None,
    }
    meta.update(obs.metadata)
    if extra:
        meta.update(extra)
    meta_path = sidecar_path(path)
    with open(meta_path, "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2, default=str)
    logger.info(f"Wrote {obs.N + 1} observations to {path}")
    return meta_path


def _read_sidecar(path: Path) -> Dict[str, Any]:
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        return {}
    try:
        with open(meta_path, "r", encoding="utf-8") as f:
            meta = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed sidecar {meta_path}: {e}") from e
    if not isinstance(meta, dict):
        raise ConfigError(f"Sidecar {meta_path} must hold a JSON object")
    return meta


def read_observations(path: PathLike) -> ObservationSet:
    """Read an observation CSV, using the sidecar when present.

    Raises:
        ConfigError: If the file is missing, unparsable, empty, lacks the
            expected columns, or its sidecar is malformed
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Observation file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ConfigError(f"Cannot parse observation file {path}: {e}") from e
    columns = [c for c in frame.columns if c.startswith("x") and c[1:].isdigit()]
    if "t" not in frame.columns or not columns:
        raise ConfigError(f"{path} must have columns i,t,x1..xd")
    if frame.empty:
        raise ConfigError(f"{path} holds no observations")
    columns.sort(key=lambda c: int(c[1:]))

    meta = _read_sidecar(path)
    try:
        points = frame[columns].to_numpy(dtype=float)
        if "D" in meta:
            D = float(meta["D"])
        elif len(frame) > 1:
            D = float(frame["t"].iloc[1] - frame["t"].iloc[0])
        else:
            raise ConfigError(f"Cannot infer D from {path}: single row and no sidecar")
        domain = DomainSpec.from_dict(meta["domain"]) if meta.get("domain") else None
        reserved = {"D", "N", "seed", "f_truth_id", "domain"}
        return ObservationSet(
            points=points,
            D=D,
            seed=int(meta.get("seed", 0)),
            domain=domain,
            f_truth_id=meta.get("f_truth_id"),
            metadata={k: v for k, v in meta.items() if k not in reserved},
        )
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"Invalid observations in {path}: {e}") from e
