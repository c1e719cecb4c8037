#!/usr/bin/env python3
"""CLI for g2flow."""

import argparse
import logging
import sys
from typing import List, Optional

from ..config import RunConfig, Settings, settings
from ..core.errors import ConfigError, G2FlowError, NumericalError
from ..state.artifacts import ArtifactWriter
from .commands import COMMANDS, RunContext

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="G2-instantons on ALC G2-manifolds of the B7 family",
        prog="g2flow",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Key-value config file (section.key = value)")
    common.add_argument("--out", "-o", help="Output directory (overrides output.directory)")
    common.add_argument("--jobs", "-j", type=int, default=None, help="Worker processes")
    common.add_argument("--rel-tol", type=float, default=None, help="Solver relative tolerance")
    common.add_argument("--t-max", type=float, default=None, help="Final time of the flows")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="Override one config entry (repeatable)")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    for spec in COMMANDS.values():
        subparsers.add_parser(spec.name, help=spec.help, parents=[common])
    subparsers.add_parser("version", help="Show version")
    return parser


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, settings.G2FLOW_LOG_LEVEL, logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )


def load_run_config(args: argparse.Namespace) -> RunConfig:
    overrides = list(args.set)
    if args.out is not None:
        overrides.append(f"output.directory={args.out}")
    if args.rel_tol is not None:
        overrides.append(f"solver.rel_tol={args.rel_tol!r}")
    if args.t_max is not None:
        overrides.append(f"solver.t_max={args.t_max!r}")
    return RunConfig.load(args.config, overrides)


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "version":
        from .. import __version__
        print(f"g2flow v{__version__}")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    configure_logging(args.verbose)
    try:
        Settings.validate()
        config = load_run_config(args)
        jobs = args.jobs if args.jobs is not None else settings.G2FLOW_JOBS
        if jobs < 1:
            raise ConfigError(f"--jobs must be at least 1, got {jobs}")
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    writer = ArtifactWriter(config.output.directory, config.config_hash(), config.output.format)
    ctx = RunContext(config=config, writer=writer, jobs=jobs)
    try:
        return COMMANDS[args.command].func(ctx)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_NUMERICAL
    except G2FlowError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
