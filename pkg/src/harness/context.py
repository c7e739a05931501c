"""Objects derived once from an ExperimentConfig and shared by every cell."""

import functools
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..geometry.cutoff import CutoffField
from ..geometry.domain import DomainSpec
from ..geometry.regions import NestedRegions
from ..models.fields import DiffusivityField, ScalarField
from ..models.rates import level_for_rate
from ..models.truth_library import TruthLibrary, truth_from_config
from ..simulation.config import DriftMode, GenericDrift, ObservationSet, SdeConfig
from ..simulation.simulator import sample_path
from ..utils.errors import ConfigError
from ..utils.logger import get_logger
from ..wavelets.basis import BasisSpec, build_basis, minimal_feasible_level
from ..wavelets.family import WaveletFamily, build_family, default_order
from .config import ExperimentConfig

logger = get_logger(__name__)

REPO_ROOT = Path(__file__).resolve().parents[2]


@dataclass(frozen=True, eq=False)
class StudyContext:
    """Domain, truth and wavelet family of one experiment.

    Attributes:
        config: The experiment
        domain: Domain O
        regions: K ⊂ O_0 ⊂ O_0^δ ⊂ O
        truth: Data-generating diffusivity f0
        truth_id: Preset or inline name of the truth
        family: Daubechies family for estimator and prior bases
        cutoff: χ on the regions
        J0: Coarse level of every basis
        M: Truncation level of the estimator
    """

    config: ExperimentConfig
    domain: DomainSpec
    regions: NestedRegions
    truth: DiffusivityField
    truth_id: str
    family: WaveletFamily
    cutoff: CutoffField
    J0: int
    M: float

    @property
    def f_min(self) -> float:
        return self.config.prior.f_min

    @property
    def dim(self) -> int:
        return self.domain.dim


def resolve_library_path(config: ExperimentConfig) -> Path:
    """Locate the truth library: as given, next to the config, or under the repository root.

    Raises:
        ConfigError: If none of the candidates exists
    """
    library = Path(config.truth.library)
    candidates = [library]
    if not library.is_absolute():
        if config.source:
            source = Path(config.source).resolve().parent
            candidates += [source / library, source / library.name, source.parent / library.name]
        candidates.append(REPO_ROOT / library)
    for candidate in candidates:
        if candidate.exists():
            return candidate
    raise ConfigError(f"Truth library not found: tried {[str(c) for c in candidates]}")


def _sup_on_grid(field: ScalarField, domain: DomainSpec) -> float:
    lo, hi = domain.bounding_box
    axes = [np.linspace(l, h, 65) for l, h in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=-1)
    return float(np.max(field.evaluate(points[domain.contains(points)])))


def build_context(config: ExperimentConfig) -> StudyContext:
    """Build the shared objects of an experiment.

    Raises:
        ConfigError: On invalid geometry or an unknown truth preset
        BasisError: If a configured J0 is infeasible
        MembershipError: If the truth leaves F_0 (posterior runs check inf f ≥ 2 f_min)
    """
    domain, regions = config.domain.build()
    library = None
    if config.truth.preset is not None:
        library = TruthLibrary()
        library.load_from_json(str(resolve_library_path(config)))
    f_min = config.prior.f_min if config.kind in ("posterior", "posterior_study") else None
    truth = truth_from_config(config.truth.as_spec(), regions, library, f_min=f_min)

    order = config.estimator.wavelet_order or default_order(config.rate.s)
    family = build_family(order)
    J0 = config.estimator.J0
    if J0 is None:
        J0 = minimal_feasible_level(family, regions)
    if config.estimator.M is not None:
        M = float(config.estimator.M)
    else:
        sup = truth.sup_bound if truth.sup_bound is not None else _sup_on_grid(truth, domain)
        M = max(2.0, float(sup))
    truth_id = config.truth.preset or config.truth.name
    logger.info(
        f"Context: {domain.shape.value} domain in d={domain.dim}, delta={regions.delta}, "
        f"truth '{truth_id}', {family.name}, J0={J0}, M={M:g}"
    )
    return StudyContext(
        config=config,
        domain=domain,
        regions=regions,
        truth=truth,
        truth_id=truth_id,
        family=family,
        cutoff=CutoffField(regions),
        J0=J0,
        M=M,
    )


def sde_config(
    context: StudyContext,
    N: int,
    seed: int,
    D: Optional[float] = None,
    f: Optional[DiffusivityField] = None,
) -> SdeConfig:
    """SdeConfig for N observations at D = N^{−a} unless overridden."""
    section = context.config.sde
    drift = GenericDrift(**section.drift) if section.drift_mode == "generic" else None
    return SdeConfig(
        f=context.truth if f is None else f,
        regions=context.regions,
        D=context.config.rate.D(N) if D is None else D,
        N=N,
        seed=seed,
        drift_mode=DriftMode(section.drift_mode),
        drift=drift,
        substeps=section.substeps,
        truth_id=context.truth_id,
    )


def simulate_observations(
    context: StudyContext, N: int, seed: int, f: Optional[DiffusivityField] = None
) -> ObservationSet:
    return sample_path(sde_config(context, N, seed, f=f))


def estimator_level(context: StudyContext, N: int, floor: Optional[int] = None) -> int:
    """Finest level J: fixed by the config, else max(J0, floor, rate rule)."""
    estimator = context.config.estimator
    if estimator.J is not None:
        return int(estimator.J)
    scale = context.config.study.J_scale or estimator.J_scale
    J = max(context.J0, level_for_rate(N, context.config.rate.s, context.dim, scale))
    return J if floor is None else max(J, floor)


@functools.lru_cache(maxsize=16)
def basis_for(context: StudyContext, J: int) -> BasisSpec:
    return build_basis(context.family, context.regions, J0=context.J0, J=J)
