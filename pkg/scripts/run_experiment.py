#
# For licensing see accompanying LICENSE.md file.
#

import argparse
import logging
import sys

from argmaxtools.utils import get_logger

from nearfieldkit._constants import EXIT_CONFIG_ERROR
from nearfieldkit.errors import NearFieldKitError
from nearfieldkit.experiments import experiments
from nearfieldkit.experiments.config import load_config

logger = get_logger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Wideband near-field localization experiments. Every subcommand writes CSV "
                    "tables to --out, each preceded by a commented metadata line")
    parser.add_argument(
        "--config",
        default=None,
        help="Path to a JSON experiment configuration (see README.md for the schema). "
             "Uses the full-scale reference defaults if not specified")
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Unsigned 64-bit seed overriding the configuration's `seed`")
    parser.add_argument(
        "--out",
        default=".",
        help="Directory to write the CSV artifacts into")
    parser.add_argument(
        "-v", "--verbose",
        action="store_true",
        help="Log per-item progress at DEBUG level")

    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser(
        "coherence-curve",
        help="Curvature coherence |F| against zeta, and zeta thresholds for delta in {0.5, 0.1, 0.01}")
    subparsers.add_parser(
        "grid",
        help="Hybrid angle-distance grid and its cardinality against uniform and pure Fresnel grids")
    subparsers.add_parser(
        "localize",
        help="Compressed-sensing localization of the configured scenario")

    music = subparsers.add_parser("music", help="MUSIC spectrum of the configured scenario")
    music.add_argument(
        "--variant",
        required=True,
        choices=list(experiments.MUSIC_VARIANTS),
        help="nbnf: narrowband near-field MUSIC, wbff: wideband far-field MUSIC "
             "(needs a desk-scale configuration)")

    boundary = subparsers.add_parser("boundary", help="Regime boundary distances over a parameter sweep")
    boundary.add_argument(
        "--sweep",
        required=True,
        choices=list(experiments.BOUNDARY_SWEEPS),
        help="bandwidth: r_NB-NF against boundary.bandwidths_hz, "
             "aperture: r_WB-FF against boundary.apertures_m")
    boundary.add_argument(
        "--rho",
        type=float,
        action="append",
        default=None,
        help="Correlation threshold, can be specified multiple times. "
             "Uses boundary.rho from the configuration if not specified")

    subparsers.add_parser(
        "nmse-sweep",
        help="Monte-Carlo NMSE against distance for the CS, NB-NF MUSIC and WB-FF MUSIC methods")
    return parser


def run(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise argparse.ArgumentTypeError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        cfg = cfg.with_seed(args.seed)

    if args.command == "coherence-curve":
        experiments.run_coherence_curve(cfg, args.out)
    elif args.command == "grid":
        experiments.run_grid(cfg, args.out)
    elif args.command == "localize":
        experiments.run_localize(cfg, args.out)
    elif args.command == "music":
        experiments.run_music(cfg, args.variant, args.out)
    elif args.command == "boundary":
        experiments.run_boundary_sweep(cfg, args.sweep, args.rho, args.out)
    elif args.command == "nmse-sweep":
        experiments.run_nmse_sweep(cfg, args.out)
    else:
        raise ValueError(f"Unknown command: {args.command}")


def _enable_debug_logging() -> None:
    """ Lowers every package logger (and its handlers) to DEBUG
    """
    for name, package_logger in logging.root.manager.loggerDict.items():
        if isinstance(package_logger, logging.Logger) and name.startswith(("nearfieldkit", "scripts", "__main__")):
            package_logger.setLevel(logging.DEBUG)
            for handler in package_logger.handlers:
                handler.setLevel(logging.DEBUG)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.verbose:
        _enable_debug_logging()

    try:
        run(args)
    except NearFieldKitError as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        return e.exit_code
    except argparse.ArgumentTypeError as e:
        logger.error(str(e))
        return EXIT_CONFIG_ERROR
    return 0


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
