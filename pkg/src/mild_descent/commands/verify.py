"""The verify suite: residual table of the numerical self-checks."""

from __future__ import annotations

import json
from argparse import Namespace

from ..core.checks import run_checks
from ..utils.colors import Colors, c, verdict
from .run import resolve_config


def cmd_verify(args: Namespace) -> int:
    """Run every check; exit 1 if any fails."""
    cfg = resolve_config(args)
    results = run_checks(cfg, draws=args.draws, thorough=args.thorough)
    passed = all(r.passed for r in results)

    if args.json:
        print(json.dumps({"passed": passed, "checks": [r.to_dict() for r in results]}, indent=2))
        return 0 if passed else 1

    width = max(len(r.name) for r in results)
    print(c(f"{'check':<{width}}  {'value':>10}  {'threshold':>10}", Colors.BOLD))
    for r in results:
        line = f"{r.name:<{width}}  {r.value:>10.3e}  {r.threshold:>10.3e}  {verdict(r.passed)}"
        if r.detail:
            line += c(f"  ({r.detail})", Colors.DIM)
        print(line)
    return 0 if passed else 1
