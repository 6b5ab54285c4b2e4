"""Command-line entry point for twophase.

Every command reads an optional YAML experiment file, writes its artifacts
to the output directory and exits with the code of the `TwoPhaseError`
that stopped it, or 0 on success.
"""

from __future__ import annotations

import argparse
from collections.abc import Callable, Sequence
from importlib.metadata import PackageNotFoundError, metadata
from pathlib import Path

import structlog
from safir.logging import configure_logging
from structlog.stdlib import BoundLogger

from . import __version__
from .config import ExperimentConfig, config, load_experiment
from .exceptions import TwoPhaseError
from .handlers.compare import cmd_compare
from .handlers.gradcheck import cmd_gradcheck
from .handlers.landscape import cmd_landscape
from .handlers.train import cmd_train

__all__ = ["COMMANDS", "build_parser", "main"]

Command = Callable[[ExperimentConfig, Path, BoundLogger], list[Path]]

COMMANDS: dict[str, tuple[Command, str]] = {
    "landscape": (cmd_landscape, "Scan the loss landscape of toy models"),
    "train": (cmd_train, "Train one objective and summarize the run"),
    "compare": (cmd_compare, "Compare Adam-only, CG-only and two-phase"),
    "gradcheck": (cmd_gradcheck, "Audit analytic gradients"),
}
"""Subcommands with their handlers and help text."""


def _description() -> str:
    try:
        return metadata("twophase")["Summary"]
    except PackageNotFoundError:
        return "Two-phase Adam and conjugate gradient training"


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser for all subcommands."""
    parser = argparse.ArgumentParser(
        prog="twophase", description=_description()
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument(
            "--config",
            type=Path,
            default=None,
            help="YAML experiment file; defaults apply when omitted.",
        )
        sub.add_argument(
            "--out",
            type=Path,
            default=Path(),
            help="Directory receiving the CSV artifacts.",
        )
        sub.add_argument(
            "--seed",
            type=int,
            default=None,
            help="Experiment seed, overriding the configuration.",
        )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return the process exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(
        profile=config.profile, log_level=config.log_level, name=config.name
    )
    logger = structlog.get_logger(config.name)
    command, _ = COMMANDS[args.command]
    try:
        experiment = load_experiment(args.config).with_seed(args.seed)
        logger = logger.bind(
            command=args.command,
            seed=experiment.seed,
            digest=experiment.digest(),
        )
        command(experiment, args.out, logger)
    except TwoPhaseError as e:
        logger.error(
            f"{args.command} failed",
            error=type(e).__name__,
            detail=str(e),
            exit_code=e.exit_code,
        )
        return e.exit_code
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
