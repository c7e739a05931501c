"""Named truth diffusivities loaded from JSON.

Truths are described relative to the region K so the same preset works on
any domain: a bump centered in K with half-width ``width_fraction`` times
the half-width of K is supported inside K, hence equals 1 on O \\ K.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..geometry.domain import Shape
from ..geometry.regions import NestedRegions
from ..utils.errors import ConfigError, MembershipError
from ..utils.logger import get_logger
from .fields import BumpField, ConstantField, DiffusivityField, SumOfBumps

logger = get_logger(__name__)

TRUTH_FAMILIES = ("constant", "bump", "sum_of_bumps")


@dataclass
class TruthDefinition:
    """Definition of a truth diffusivity.

    Attributes:
        name: Identifier (e.g., "mild_bump")
        family: One of "constant", "bump", "sum_of_bumps"
        params: Family parameters
        description: Free text shown by listings
    """

    name: str
    family: str
    params: Dict[str, Any] = field(default_factory=dict)
    description: str = ""

    def __post_init__(self):
        """Validate truth definition constraints."""
        if not self.name:
            raise ConfigError("Truth name cannot be empty")
        if self.family not in TRUTH_FAMILIES:
            raise ConfigError(f"Invalid truth family '{self.family}'; expected one of {TRUTH_FAMILIES}")
        if self.family == "constant" and "value" not in self.params:
            raise ConfigError(f"Constant truth '{self.name}' needs a 'value'")
        if self.family == "bump" and "amplitude" not in self.params:
            raise ConfigError(f"Bump truth '{self.name}' needs an 'amplitude'")
        if self.family == "sum_of_bumps" and not self.params.get("bumps"):
            raise ConfigError(f"Truth '{self.name}' needs a non-empty 'bumps' list")


class TruthLibrary:
    """Loads truth presets and builds fields from them."""

    def __init__(self):
        """Initialize empty truth library."""
        self.truths: Dict[str, TruthDefinition] = {}
        self.config_path: Optional[Path] = None

    def load_from_json(self, path: str) -> None:
        """Load truth presets from a JSON file.

        Args:
            path: Path to truths.json

        Raises:
            ConfigError: If the file is missing or malformed

        Expected JSON format:
            [
                {
                    "name": "mild_bump",
                    "family": "bump",
                    "params": {"amplitude": 0.5, "width_fraction": 1.0},
                    "description": "..."
                },
                ...
            ]
        """
        config_file = Path(path)
        if not config_file.exists():
            raise ConfigError(f"Truth library not found: {path}")
        self.config_path = config_file

        try:
            with open(config_file, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Truth library {path} is not valid JSON: {e}") from e

        if not isinstance(data, list):
            raise ConfigError("Truth library must be a JSON array")

        self.truths = {}
        for item in data:
            try:
                truth = TruthDefinition(
                    name=item["name"],
                    family=item["family"],
                    params=item.get("params", {}),
                    description=item.get("description", ""),
                )
            except KeyError as e:
                raise ConfigError(f"Missing required field in truth definition: {e}") from e
            self.truths[truth.name] = truth
        logger.debug(f"Loaded {len(self.truths)} truth presets from {path}")

    def get(self, name: str) -> TruthDefinition:
        """Get a preset by name.

        Raises:
            ConfigError: If the preset does not exist
        """
        if name not in self.truths:
            available = ", ".join(self.truths.keys())
            raise ConfigError(f"Truth '{name}' not found. Available truths: {available}")
        return self.truths[name]

    def list_truths(self) -> List[str]:
        return list(self.truths.keys())


def _k_frame(regions: NestedRegions):
    """Center and per-axis half-widths of the largest box inside K."""
    K = regions.K
    if K.shape is Shape.HYPERRECTANGLE:
        lo, hi = K.bounding_box
        return (lo + hi) / 2.0, (hi - lo) / 2.0
    half = K.radius / np.sqrt(K.dim)
    return np.asarray(K.center), np.full(K.dim, half)


def _bump(params: Dict[str, Any], regions: NestedRegions, base: float) -> BumpField:
    center, half = _k_frame(regions)
    offset = np.broadcast_to(np.asarray(params.get("center_fraction", 0.0), dtype=float), center.shape)
    width = np.broadcast_to(np.asarray(params.get("width_fraction", 1.0), dtype=float), center.shape)
    c = center + offset * half
    rho = width * half
    if np.any(np.abs(offset) + width > 1.0 + 1e-12):
        raise MembershipError(
            f"Bump with center_fraction={offset.tolist()} and width_fraction={width.tolist()} "
            "leaves K",
            bound="support_in_K",
            value=float(np.max(np.abs(offset) + width)),
            limit=1.0,
        )
    return BumpField(center=tuple(c), widths=tuple(rho), amplitude=float(params["amplitude"]), base=base)


def build_truth(
    definition: TruthDefinition, regions: NestedRegions, f_min: Optional[float] = None
) -> DiffusivityField:
    """Build the field described by a definition on the given regions.

    Args:
        definition: Truth definition
        regions: Nested regions locating K
        f_min: When given, enforce inf f ≥ 2 f_min

    Raises:
        MembershipError: If the field leaves K or violates the lower bound
    """
    d = regions.domain.dim
    params = definition.params
    if definition.family == "constant":
        truth: DiffusivityField = ConstantField(float(params["value"]), d)
        lower = float(params["value"])
    elif definition.family == "bump":
        truth = _bump(params, regions, base=1.0)
        lower = 1.0 + min(0.0, truth.amplitude)
    else:
        bumps = tuple(_bump(b, regions, base=0.0) for b in params["bumps"])
        truth = SumOfBumps(bumps=bumps, base=1.0)
        lower = truth.f_min
    if f_min is not None and lower < 2 * f_min:
        raise MembershipError(
            f"Truth '{definition.name}' has lower bound {lower} below 2 f_min = {2 * f_min}",
            bound="2*f_min",
            value=lower,
            limit=2 * f_min,
        )
    return truth


def truth_from_config(
    spec: Dict[str, Any],
    regions: NestedRegions,
    library: Optional[TruthLibrary] = None,
    f_min: Optional[float] = None,
) -> DiffusivityField:
    """Resolve a config ``truth`` section: ``{"preset": name}`` or an inline definition."""
    if "preset" in spec:
        if library is None:
            raise ConfigError("Truth preset requested but no truth library is loaded")
        definition = library.get(spec["preset"])
    else:
        definition = TruthDefinition(
            name=spec.get("name", "inline"),
            family=spec.get("family", ""),
            params=spec.get("params", {}),
        )
    return build_truth(definition, regions, f_min)


def k_bump(regions: NestedRegions, width_fraction: float = 1.0, amplitude: float = 1.0) -> BumpField:
    """Zero-based bump centered in K, used as a perturbation direction.

    Raises:
        MembershipError: If the support leaves K
    """
    return _bump({"amplitude": amplitude, "width_fraction": width_fraction}, regions, base=0.0)
