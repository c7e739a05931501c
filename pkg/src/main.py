"""Command-line entry point for diffusivity-lab."""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from src.estimation.estimator import (
    check_BN,
    estimate_f,
    select_level,
    truth_error,
    write_estimate_grid,
)
from src.geometry.regions import build_nested_regions
from src.harness.assouad_study import AssouadStudy
from src.harness.config import ExperimentConfig, load_config
from src.harness.context import StudyContext, basis_for, build_context, estimator_level, sde_config
from src.harness.kl_sweep import KLSweep
from src.harness.posterior_study import PosteriorStudy, sample_posterior
from src.harness.rate_study import RateStudy
from src.harness.study import StudyRunner
from src.models.rates import (
    RateParams,
    alpha_d,
    check_remark_conditions,
    level_for_rate,
    rate_sequences,
    s_star,
    smoothness_verdict,
)
from src.simulation.config import ObservationSet
from src.simulation.io import read_observations, write_observations
from src.simulation.simulator import simulate_paths
from src.utils.constants import DEFAULT_BN_KAPPA, DEFAULT_TRUNCATION_M
from src.utils.errors import ConfigError, LabError, NumericalError
from src.utils.logger import get_logger, setup_logger, setup_metrics_logger
from src.wavelets.basis import build_basis, minimal_feasible_level
from src.wavelets.family import build_family, default_order
from src.wavelets.projection import write_coefficients

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

STUDY_COMMANDS = {
    "rate-study": "rate_study",
    "assouad-study": "assouad_study",
    "posterior-study": "posterior_study",
    "kl-sweep": "kl_sweep",
}

logger = get_logger(__name__)


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Flags accepted before or after the subcommand."""

    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--config", default=default(None), help="Experiment JSON file")
    parser.add_argument("--out", default=default(None), help="Output directory")
    parser.add_argument("--seed", type=int, default=default(None), help="Study seed (u64)")
    parser.add_argument(
        "--debug", action="store_true", default=default(False), help="Enable debug logging"
    )
    parser.add_argument(
        "--log-file",
        default=default("logs/diffusivity_lab.log"),
        help="Log file (default: logs/diffusivity_lab.log)",
    )


def build_parser() -> argparse.ArgumentParser:
    """Parser with the global flags and one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="diffusivity-lab",
        description="Diffusivity estimation for reflected diffusions from discrete observations",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Smoothness thresholds and rate sequences
  diffusivity-lab ratecalc --d 1 --a 0.6 --s 7 --N 10000

  # Simulate one path, then estimate from the CSV alone
  diffusivity-lab simulate --config config/experiments/simulate_1d.json --out runs/sim
  diffusivity-lab estimate --data runs/sim/observations.csv --out runs/est

  # Pseudo-posterior on simulated data
  diffusivity-lab posterior --config config/experiments/posterior_study.json --N 4096

  # Studies
  diffusivity-lab rate-study --config config/experiments/rate_study.json --seed 7
  diffusivity-lab kl-sweep --config config/experiments/kl_sweep.json
        """,
    )
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command")

    simulate = sub.add_parser("simulate", parents=[common], help="Simulate observation paths")
    simulate.add_argument("--N", type=int, default=None, help="Observations per path")
    simulate.add_argument("--D", type=float, default=None, help="Sampling interval (default N^-a)")
    simulate.add_argument("--n-paths", type=int, default=1, help="Independent paths (default: 1)")

    estimate = sub.add_parser("estimate", parents=[common], help="Least-squares wavelet estimate")
    estimate.add_argument("--data", required=True, help="Observation CSV written by 'simulate'")
    estimate.add_argument("--J", type=int, default=None, help="Finest level (default: rate rule)")
    estimate.add_argument("--J-scale", type=float, default=1.0, help="Constant of the rate rule")
    estimate.add_argument("--M", type=float, default=None, help="Truncation level")
    estimate.add_argument(
        "--select-level", action="store_true", help="Choose J by the penalized residual criterion"
    )
    estimate.add_argument("--grid-ppu", type=float, default=32.0, help="Grid points per unit")

    posterior = sub.add_parser("posterior", parents=[common], help="Run pCN chains on one dataset")
    posterior.add_argument("--data", default=None, help="Observation CSV (simulated when omitted)")
    posterior.add_argument("--N", type=int, default=None, help="Observations when simulating")

    for command, kind in STUDY_COMMANDS.items():
        sub.add_parser(command, parents=[common], help=f"Run the {kind.replace('_', ' ')}")

    ratecalc = sub.add_parser("ratecalc", parents=[common], help="Print α_d, s*, ε_N, E_N, V_N")
    ratecalc.add_argument("--d", type=int, required=True, help="Dimension")
    ratecalc.add_argument("--a", type=float, required=True, help="Sampling exponent, D = N^-a")
    ratecalc.add_argument("--s", type=float, required=True, help="Smoothness")
    ratecalc.add_argument("--N", type=int, default=None, help="Sample size for the sequences")

    return parser


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Args:
        argv: Argument list; sys.argv[1:] when None

    Returns:
        argparse.Namespace with parsed arguments
    """
    return build_parser().parse_args(argv)


def _load(args: argparse.Namespace, kind: Optional[str] = None) -> ExperimentConfig:
    """Load --config and apply --seed / --out / the subcommand's kind."""
    if not args.config:
        raise ConfigError(f"'{args.command}' needs --config")
    config = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = args.out
    if kind is not None:
        changes["kind"] = kind
    return replace(config, **changes) if changes else config


def _output_dir(args: argparse.Namespace, config: Optional[ExperimentConfig] = None) -> Path:
    out = Path(args.out or (config.output_dir if config else "results"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_ratecalc(args: argparse.Namespace) -> int:
    try:
        alpha = alpha_d(args.d)
        target = s_star(args.d, args.a)
        remark = check_remark_conditions(args.d, args.a, args.s)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    print(f"alpha_d = {alpha}")
    print(f"s* = {target:g}")
    print(f"s = {args.s:g}: {smoothness_verdict(args.d, args.a, args.s)} s*")
    print(f"condition threshold = {remark.threshold:g} ({remark.case}): {remark.verdict}")
    if args.N is not None:
        seq = rate_sequences(RateParams(d=args.d, a=args.a, s=args.s, N=args.N))
        print(f"D = {seq.D:.6g}")
        print(f"eps_N = {seq.eps_N:.6g}")
        print(f"E_N = {seq.E_N:.6g}")
        print(f"V_N = {seq.V_N:.6g}")
    return EXIT_OK


def run_simulate(args: argparse.Namespace) -> int:
    config = _load(args)
    context = build_context(config)
    N = args.N or config.sde.N or config.rate.N_grid[0]
    D = args.D or config.sde.D
    sde = sde_config(context, N, config.seed, D=D)
    logger.info(f"Sampling regime: {sde.regime_report()}")
    out = _output_dir(args, config)
    extra = {
        "delta": context.regions.delta,
        "s": config.rate.s,
        "wavelet_order": context.family.order,
        "truth": context.truth.describe(),
    }
    paths = simulate_paths(sde, n_paths=args.n_paths)
    for k, obs in enumerate(paths):
        name = "observations.csv" if len(paths) == 1 else f"observations_{k}.csv"
        write_observations(obs, out / name, extra=extra)
    print(f"Simulated {len(paths)} path(s) of N={N} at D={sde.D:.6g} into {out}")
    return EXIT_OK


def _estimate_setup(
    args: argparse.Namespace, obs: ObservationSet, context: Optional[StudyContext]
):
    """Basis, family, regions and M from the config, or from the observation sidecar."""
    if context is not None:
        J = args.J if args.J is not None else estimator_level(context, obs.N)
        M = args.M or context.M
        return context.family, context.regions, context.J0, J, M, context.config.estimator.baseline
    if obs.domain is None or "delta" not in obs.metadata:
        raise ConfigError("Observation sidecar lacks domain/delta; pass --config")
    regions = build_nested_regions(obs.domain, float(obs.metadata["delta"]))
    s = float(obs.metadata.get("s", 2.0))
    family = build_family(int(obs.metadata.get("wavelet_order") or default_order(s)))
    J0 = minimal_feasible_level(family, regions)
    if args.J is not None:
        J = args.J
    else:
        J = max(J0, level_for_rate(obs.N, s, obs.dim, args.J_scale))
    return family, regions, J0, J, args.M or DEFAULT_TRUNCATION_M, 1.0


def run_estimate(args: argparse.Namespace) -> int:
    obs = read_observations(args.data)
    context = build_context(_load(args)) if args.config else None
    family, regions, J0, J, M, baseline = _estimate_setup(args, obs, context)
    if args.select_level:
        J = select_level(obs, family, regions, range(J0, J + 3), J0=J0).J
    basis = build_basis(family, regions, J0=J0, J=J) if context is None else basis_for(context, J)
    output = estimate_f(obs, basis, M=M, baseline=baseline)
    kappa = context.config.estimator.kappa if context is not None else DEFAULT_BN_KAPPA
    well_posed, worst = check_BN(obs, basis, regions, kappa=kappa)

    out = _output_dir(args, context.config if context else None)
    write_estimate_grid(output, regions.domain, out / "estimate_grid.csv", args.grid_ppu)
    write_coefficients(output.coeffs, out / "coefficients.csv")
    print(f"Estimated {basis.size} coefficients at J0={J0}, J={J} from N={obs.N}")
    print(f"rank={output.report.rank} active_rows={output.report.active_rows} M={M:g}")
    print(f"B_N(kappa={kappa:g}): {'holds' if well_posed else 'fails'} (max |eig - 1| = {worst:.3f})")
    if context is not None:
        for name, value in truth_error(output, context.truth, J).items():
            print(f"{name} = {value:.6g}")
    return EXIT_OK


def run_posterior(args: argparse.Namespace) -> int:
    config = _load(args, kind="posterior")
    context = build_context(config)
    if args.data:
        obs = read_observations(args.data)
    else:
        N = args.N or config.sde.N or config.rate.N_grid[0]
        obs = simulate_paths(sde_config(context, N, config.seed))[0]
    summary, target = sample_posterior(context, obs, config.seed)
    out = _output_dir(args, config)
    summary.mean_frame().to_csv(out / "posterior_mean.csv", index=False, float_format="%.17g")
    summary.write_trace(out / "chain_trace.csv")
    print(f"Active transitions: {target.active_transitions}")
    print(f"Kept states: {summary.n_kept}, acceptance {summary.acceptance_rate:.3f}")
    print(f"Effective sample size: {summary.ess:.1f}")
    print(f"Posterior-mean L2 error: {summary.mean_l2(context.truth):.6g}")
    return EXIT_OK


def run_study(args: argparse.Namespace) -> int:
    config = _load(args, kind=STUDY_COMMANDS[args.command])
    out = _output_dir(args, config)
    setup_metrics_logger(str(out / "metrics.log"))
    runner = StudyRunner()
    runner.register_study(RateStudy())
    runner.register_study(AssouadStudy())
    runner.register_study(PosteriorStudy())
    runner.register_study(KLSweep())
    result = runner.run(config, output_dir=str(out))
    print(f"{result.kind}: {len(result.records)} cells ({result.failed_cells} failed) into {out}")
    for name, fit in result.fits.items():
        print(f"  slope[{name}] = {fit.slope:.4f} ± {fit.stderr:.4f} ({fit.n_points} points)")
    return EXIT_OK


COMMANDS = {
    "ratecalc": run_ratecalc,
    "simulate": run_simulate,
    "estimate": run_estimate,
    "posterior": run_posterior,
    **{command: run_study for command in STUDY_COMMANDS},
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point.

    Returns:
        0 on success, 2 on a configuration error, 3 on a numerical failure
    """
    args = parse_arguments(argv)
    setup_logger(
        level=logging.DEBUG if args.debug else logging.INFO,
        log_file=args.log_file,
        file_logging=args.command not in (None, "ratecalc"),
    )
    if args.command is None:
        build_parser().print_help()
        return EXIT_CONFIG

    try:
        return COMMANDS[args.command](args)
    except NumericalError as e:
        logger.error(f"Numerical failure: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LabError as e:
        logger.error(f"Invalid input: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
