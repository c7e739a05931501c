"""Experiment configuration loaded from JSON.

Each section maps to a frozen dataclass that validates itself; unknown keys
are rejected so that typos fail loudly.

Expected JSON format:
    {
        "kind": "rate_study",
        "seed": 20240611,
        "output_dir": "results/rate_1d",
        "domain": {"shape": "hyperrectangle", "lower": [0.0], "upper": [7.0], "delta": 0.875},
        "truth": {"preset": "mild_bump"},
        "rate": {"d": 1, "a": 0.6, "s": 2.0, "N_grid": [1024, 2048, 4096]},
        "estimator": {"wavelet_order": 4, "J_scale": 4.0},
        "study": {"replicates": 20, "workers": 4}
    }
"""

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type, TypeVar

from ..geometry.domain import DomainSpec
from ..geometry.regions import NestedRegions, build_nested_regions
from ..utils.constants import DEFAULT_BN_KAPPA, DEFAULT_F_MIN
from ..utils.errors import ConfigError, DomainError
from ..utils.logger import get_logger

logger = get_logger(__name__)

EXPERIMENT_KINDS = (
    "simulate",
    "estimate",
    "posterior",
    "rate_study",
    "assouad_study",
    "posterior_study",
    "kl_sweep",
)

T = TypeVar("T")


def _section(cls: Type[T], data: Optional[Dict[str, Any]], name: str) -> T:
    """Build a section dataclass, rejecting unknown keys."""
    data = dict(data or {})
    allowed = {f.name for f in fields(cls) if f.init}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(
            f"Unknown key(s) in section '{name}': {unknown}; allowed: {sorted(allowed)}"
        )
    for key, value in list(data.items()):
        if isinstance(value, list):
            data[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"Invalid section '{name}': {e}") from e


@dataclass(frozen=True)
class DomainConfig:
    """Domain O and the separation δ."""

    shape: str = "hyperrectangle"
    lower: Tuple[float, ...] = (0.0,)
    upper: Tuple[float, ...] = (1.0,)
    center: Tuple[float, ...] = ()
    radius: float = 0.0
    delta: float = 0.1
    normalized: bool = False

    def build(self) -> Tuple[DomainSpec, NestedRegions]:
        """Domain and nested regions.

        Raises:
            ConfigError: If the geometry is invalid
        """
        try:
            domain = DomainSpec.from_dict(
                {
                    "shape": self.shape,
                    "lower": self.lower,
                    "upper": self.upper,
                    "center": self.center,
                    "radius": self.radius,
                    "normalized": self.normalized,
                }
            )
            return domain, build_nested_regions(domain, self.delta)
        except DomainError as e:
            raise ConfigError(f"Invalid domain section: {e}") from e


@dataclass(frozen=True)
class TruthConfig:
    """Truth diffusivity: a preset name or an inline family definition."""

    preset: Optional[str] = None
    name: str = "inline"
    family: Optional[str] = None
    params: Any = None
    library: str = "config/truths.json"

    def __post_init__(self):
        if self.preset is None and self.family is None:
            raise ConfigError("Truth section needs 'preset' or 'family'")

    def as_spec(self) -> Dict[str, Any]:
        if self.preset is not None:
            return {"preset": self.preset}
        return {"name": self.name, "family": self.family, "params": _thaw(self.params or {})}


def _thaw(value):
    """Turn tuples produced by the section loader back into lists inside params."""
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    if isinstance(value, dict):
        return {k: _thaw(v) for k, v in value.items()}
    return value


@dataclass(frozen=True)
class RateConfig:
    """Dimension, sampling exponent (D = N^{−a}), smoothness and the N grid."""

    d: int = 1
    a: float = 0.6
    s: float = 2.0
    N_grid: Tuple[int, ...] = (1024,)

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"rate.d must be positive: {self.d}")
        if not 0.5 < self.a < 1.0:
            raise ConfigError(f"rate.a must lie in (1/2, 1): {self.a}")
        if self.s <= 0:
            raise ConfigError(f"rate.s must be positive: {self.s}")
        grid = tuple(int(n) for n in self.N_grid)
        if not grid or any(n < 1 for n in grid):
            raise ConfigError(f"rate.N_grid must hold positive integers: {self.N_grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"rate.N_grid must be strictly increasing: {grid}")
        object.__setattr__(self, "N_grid", grid)

    def D(self, N: int) -> float:
        return float(N) ** (-self.a)


@dataclass(frozen=True)
class EstimatorConfig:
    """Least-squares estimator settings.

    Attributes:
        wavelet_order: Daubechies order p; chosen from s when None
        J0: Coarse level; the minimal feasible one when None
        J: Fixed finest level; the rate rule max(J0, round(log2(J_scale N^{1/(2s+d)}))) when None
        J_scale: Constant in the rate rule
        M: Truncation level; the truth's sup bound (at least 2) when None
        kappa: κ of the B_N check
        baseline: Known boundary value g (constant)
    """

    wavelet_order: Optional[int] = None
    J0: Optional[int] = None
    J: Optional[int] = None
    J_scale: float = 1.0
    M: Optional[float] = None
    kappa: float = DEFAULT_BN_KAPPA
    baseline: float = 1.0

    def __post_init__(self):
        if self.J_scale <= 0:
            raise ConfigError(f"estimator.J_scale must be positive: {self.J_scale}")
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError(f"estimator.kappa must lie in (0, 1): {self.kappa}")
        if self.M is not None and self.M <= 0:
            raise ConfigError(f"estimator.M must be positive: {self.M}")


@dataclass(frozen=True)
class PriorConfig:
    """Prior and pCN chain settings."""

    kind: str = "wavelet"
    s: Optional[float] = None
    f_min: float = DEFAULT_F_MIN
    lattice_points: int = 32
    jitter: float = 1e-8
    iters: int = 2000
    burn_in: int = 500
    thin: int = 1
    beta: float = 0.2
    chains: int = 1
    M_contraction: float = 1.0
    grid_points_per_unit: float = 16.0

    def __post_init__(self):
        if self.kind not in ("wavelet", "matern"):
            raise ConfigError(f"prior.kind must be 'wavelet' or 'matern': {self.kind}")
        if not 0.0 <= self.f_min < 1.0:
            raise ConfigError(f"prior.f_min must lie in [0, 1): {self.f_min}")
        if self.iters <= self.burn_in:
            raise ConfigError(f"prior.iters ({self.iters}) must exceed burn_in ({self.burn_in})")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"prior.beta must lie in (0, 1]: {self.beta}")
        if self.thin < 1 or self.chains < 1:
            raise ConfigError("prior.thin and prior.chains must be at least 1")


@dataclass(frozen=True)
class SdeSection:
    """Simulation overrides: D and N default to the rate section."""

    drift_mode: str = "gradient"
    drift: Any = None
    substeps: Optional[int] = None
    D: Optional[float] = None
    N: Optional[int] = None

    def __post_init__(self):
        if self.drift_mode not in ("gradient", "generic", "none"):
            raise ConfigError(
                f"sde.drift_mode must be gradient, generic or none: {self.drift_mode}"
            )
        if self.drift_mode == "generic" and not self.drift:
            raise ConfigError("sde.drift_mode 'generic' needs a 'drift' entry")


@dataclass(frozen=True)
class KLConfig:
    """KL sweep grid."""

    epsilons: Tuple[float, ...] = (0.4, 0.2, 0.1, 0.05)
    N_grid: Tuple[int, ...] = (64, 128, 256, 512)
    D: float = 1e-3
    n_mc: int = 100_000
    n_paths: int = 200
    perturbation_width: float = 0.8

    def __post_init__(self):
        if not self.epsilons or any(e <= 0 for e in self.epsilons):
            raise ConfigError(f"kl.epsilons must be positive: {self.epsilons}")
        if not self.N_grid or any(n < 1 for n in self.N_grid):
            raise ConfigError(f"kl.N_grid must hold positive integers: {self.N_grid}")
        if self.D <= 0 or self.n_mc < 2 or self.n_paths < 2:
            raise ConfigError("kl.D must be positive and kl.n_mc, kl.n_paths at least 2")


@dataclass(frozen=True)
class StudyConfig:
    """Replication and execution settings."""

    replicates: int = 10
    workers: int = 1
    corners: int = 8
    gamma_scale: Optional[float] = None
    J_scale: Optional[float] = None
    bootstrap: int = 200

    def __post_init__(self):
        if self.replicates < 1 or self.workers < 1 or self.corners < 1:
            raise ConfigError("study.replicates, workers and corners must be at least 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """A complete experiment."""

    kind: str
    domain: DomainConfig
    truth: TruthConfig
    rate: RateConfig = field(default_factory=RateConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    sde: SdeSection = field(default_factory=SdeSection)
    kl: KLConfig = field(default_factory=KLConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    seed: int = 0
    output_dir: str = "results"
    source: Optional[str] = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"Unknown experiment kind '{self.kind}'; expected one of {EXPERIMENT_KINDS}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer: {self.seed}")
        dim = len(self.domain.center) if self.domain.shape == "ball" else len(self.domain.lower)
        if dim != self.rate.d:
            raise ConfigError(f"rate.d={self.rate.d} differs from the domain dimension {dim}")


_SECTIONS = {
    "domain": DomainConfig,
    "truth": TruthConfig,
    "rate": RateConfig,
    "estimator": EstimatorConfig,
    "prior": PriorConfig,
    "sde": SdeSection,
    "kl": KLConfig,
    "study": StudyConfig,
}
_TOP_LEVEL = {"kind", "seed", "output_dir"}


def config_from_dict(data: Dict[str, Any], source: Optional[str] = None) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed JSON.

    Raises:
        ConfigError: On unknown keys or invalid values
    """
    if not isinstance(data, dict):
        raise ConfigError("Experiment config must be a JSON object")
    unknown = sorted(set(data) - set(_SECTIONS) - _TOP_LEVEL)
    if unknown:
        raise ConfigError(f"Unknown top-level key(s): {unknown}")
    if "kind" not in data or "domain" not in data or "truth" not in data:
        raise ConfigError("Experiment config needs 'kind', 'domain' and 'truth'")
    sections = {name: _section(cls, data.get(name), name) for name, cls in _SECTIONS.items()}
    return ExperimentConfig(
        kind=data["kind"],
        seed=int(data.get("seed", 0)),
        output_dir=str(data.get("output_dir", "results")),
        source=source,
        **sections,
    )


def load_config(path: str) -> ExperimentConfig:
    """Load an experiment from a JSON file.

    Raises:
        ConfigError: If the file is missing, malformed or invalid
    """
    config_file = Path(path)
    if not config_file.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        with open(config_file, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config {path} is not valid JSON: {e}") from e
    config = config_from_dict(data, source=str(config_file))
    logger.debug(f"Loaded {config.kind} config from {path}")
    return config
