"""Descent runs: reproduce and descend."""

from __future__ import annotations

import json
import logging
from argparse import Namespace
from pathlib import Path
from typing import Optional

from .. import __version__
from ..core.benchmark import build_problem, reproduce, target_profile, time_grid, torus_grid
from ..core.config import RDConfig, load_config
from ..core.descent import DescentReport
from ..core.errors import DescentAborted
from ..core.problem import ControlSignal
from ..utils.artifacts import RunManifest, emit_artifacts, fmt, read_control
from ..utils.colors import Colors, c

logger = logging.getLogger(__name__)


def resolve_config(args: Namespace) -> RDConfig:
    """Config file plus command-line overrides."""
    cfg = load_config(getattr(args, "config", None))
    changes = {}
    if getattr(args, "iters", None) is not None:
        changes["outer_iters"] = args.iters
    if getattr(args, "output_dir", None) is not None:
        changes["output_dir"] = str(args.output_dir)
    return cfg.replace(**changes) if changes else cfg


def write_run(command: str, cfg: RDConfig, report: DescentReport) -> list[Path]:
    space = torus_grid(cfg)
    grid = time_grid(cfg)
    manifest = RunManifest(command=command, version=__version__, config=cfg.to_dict())
    manifest.summary = {
        "iterations": report.iterations,
        "stop_reason": report.stop_reason,
        "final_cost": fmt(report.cost_history[-1]),
        "dt": fmt(grid.dt),
        "steps_per_interval": grid.steps_per_interval,
    }
    return emit_artifacts(
        Path(cfg.output_dir),
        manifest,
        report.cost_history,
        report.controls,
        report.terminal_states,
        space.nodes,
        target_profile(space.nodes),
    )


def _run(command: str, args: Namespace, cfg: RDConfig, u0: Optional[ControlSignal] = None) -> int:
    try:
        report = reproduce(cfg, u0=u0)
    except DescentAborted as exc:
        if isinstance(exc.partial, DescentReport) and exc.partial.cost_history:
            write_run(command, cfg, exc.partial)
            logger.warning("partial artifacts written to %s", cfg.output_dir)
        raise
    written = write_run(command, cfg, report)

    if args.json:
        payload = report.to_dict()
        payload["output_dir"] = cfg.output_dir
        payload["files"] = [p.name for p in written]
        print(json.dumps(payload, indent=2))
        return 0

    print(c(f"{command}: {report.iterations} iteration(s), stop: {report.stop_reason}", Colors.BOLD))
    for i, cost in enumerate(report.cost_history):
        print(f"  {i:>3}  {cost:.4f}")
    for event in report.rejections:
        print(c(f"  rejected iteration {event.iteration}: {event.previous_cost:.4f} -> {event.cost:.4f}", Colors.YELLOW))
    print(c(f"Artifacts: {cfg.output_dir} ({len(written)} files)", Colors.DIM))
    return 0


def cmd_reproduce(args: Namespace) -> int:
    """Run the benchmark with defaults or the given config."""
    return _run("reproduce", args, resolve_config(args))


def cmd_descend(args: Namespace) -> int:
    """Run the descent with a custom config, optionally warm-started."""
    cfg = resolve_config(args)
    u0 = None
    if args.init_control is not None:
        u0 = read_control(args.init_control)
        problem = build_problem(cfg)
        problem.require_admissible(u0)
        time_grid(cfg).require_aligned(u0)
    return _run("descend", args, cfg, u0)
