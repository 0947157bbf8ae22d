"""CLI argument parsing and command routing."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .commands import increment, run, verify
from .core.config import create_example_config, write_example_config
from .core.errors import ArtifactError, ConfigError, MildDescentError
from .utils.colors import Colors, c


def add_json_flag(parser: argparse.ArgumentParser) -> None:
    """Add --json flag to a parser."""
    parser.add_argument(
        "--json", "-j",
        action="store_true",
        help="Output in JSON format (for scripting)",
    )


def add_run_flags(parser: argparse.ArgumentParser, config_required: bool = False) -> None:
    parser.add_argument(
        "--config", "-c",
        type=Path,
        required=config_required,
        help="Flat TOML config (missing keys take the benchmark defaults)",
    )
    parser.add_argument("--output-dir", "-o", type=Path, help="Artifact directory (overrides output_dir)")
    parser.add_argument("--iters", type=int, help="Outer iterations (overrides outer_iters)")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only warnings and errors on stderr")
    add_json_flag(parser)


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        prog="mild-descent",
        description=c("mild-descent", Colors.BOLD) + " - monotone sample-and-hold descent for semilinear control problems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
{c('Examples:', Colors.BOLD)}
  mild-descent reproduce
  mild-descent descend --config run.toml --init-control out/control_iter4.csv
  mild-descent verify --draws 10
  mild-descent increment out/control_iter0.csv out/control_iter1.csv
  mild-descent reproduce --json | jq '.cost_history'

{c('Environment:', Colors.BOLD)}
  MILD_DESCENT_THREADS   probe threads (0 = serial)
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # reproduce
    p = subparsers.add_parser("reproduce", help="Run the reaction-diffusion benchmark")
    add_run_flags(p)

    # descend
    p = subparsers.add_parser("descend", help="Run the descent with a custom config")
    add_run_flags(p, config_required=True)
    p.add_argument("--init-control", type=Path, help="Start from a control CSV instead of u = 0")

    # verify
    p = subparsers.add_parser("verify", help="Run the numerical self-checks")
    add_run_flags(p)
    p.add_argument("--draws", type=int, default=5, help="Random problems per oracle check")
    p.add_argument("--thorough", action="store_true", help="Include benchmark descents")

    # increment
    p = subparsers.add_parser("increment", help="Exact cost increment between two control files")
    p.add_argument("baseline", type=Path, help="Baseline control CSV (ubar)")
    p.add_argument("control", type=Path, help="Candidate control CSV (u)")
    add_run_flags(p)
    p.add_argument("--epsilon", type=float, help="Probe step (default: config epsilon)")
    p.add_argument("--scheme", choices=["forward", "central"], default="forward", help="Probe differences")
    p.add_argument("--direct", action="store_true", help="Also print the direct cost difference")

    # example-config
    p = subparsers.add_parser("example-config", help="Print or write an example config")
    p.add_argument("--output", type=Path, help="Write to this file instead of stdout")

    # completions
    p = subparsers.add_parser("completions", help="Generate shell completions")
    p.add_argument("shell", choices=["bash", "zsh", "fish"], help="Shell type")

    return parser


def setup_logging(quiet: bool) -> None:
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def report_error(exc: MildDescentError) -> None:
    """Machine-readable failure line on stderr."""
    message = " ".join(str(exc).split())
    print(f"error: code={exc.code} message={message}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 0

    setup_logging(getattr(args, "quiet", False))

    commands = {
        "reproduce": run.cmd_reproduce,
        "descend": run.cmd_descend,
        "verify": verify.cmd_verify,
        "increment": increment.cmd_increment,
        "example-config": cmd_example_config,
        "completions": cmd_completions,
    }

    try:
        result = commands[args.command](args)
    except ConfigError as exc:
        report_error(exc)
        return 2
    except MildDescentError as exc:
        report_error(exc)
        return 1
    return result if isinstance(result, int) else 0


def cmd_example_config(args: argparse.Namespace) -> int:
    """Print or write the example config."""
    if args.output is None:
        print(create_example_config(), end="")
        return 0
    try:
        path = write_example_config(args.output)
    except OSError as exc:
        raise ArtifactError(f"cannot write {args.output}: {exc.strerror or exc}") from None
    print(c(f"Wrote {path}", Colors.GREEN))
    return 0


def cmd_completions(args: argparse.Namespace) -> int:
    """Generate shell completions."""
    from .utils.completions import generate_completions
    print(generate_completions(args.shell))
    return 0


if __name__ == "__main__":
    sys.exit(main())
