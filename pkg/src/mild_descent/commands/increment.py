"""Exact cost increment between two control files."""

from __future__ import annotations

import json
from argparse import Namespace

from ..core.benchmark import build_problem, time_grid
from ..core.flow import evaluate_cost
from ..core.increment import exact_increment
from ..utils.artifacts import fmt, read_control
from .run import resolve_config


def cmd_increment(args: Namespace) -> int:
    """Print I[u] - I[ubar] from the Hamiltonian representation."""
    cfg = resolve_config(args)
    problem = build_problem(cfg)
    grid = time_grid(cfg)
    ubar = read_control(args.baseline)
    u = read_control(args.control)
    epsilon = cfg.epsilon if args.epsilon is None else args.epsilon
    value = exact_increment(problem, grid, ubar, u, epsilon=epsilon, scheme=args.scheme)

    if args.json:
        payload = {"increment": value, "epsilon": epsilon, "scheme": args.scheme}
        if args.direct:
            payload["direct"] = evaluate_cost(problem, grid, u) - evaluate_cost(problem, grid, ubar)
        print(json.dumps(payload, indent=2))
        return 0
    print(fmt(value))
    if args.direct:
        print(fmt(evaluate_cost(problem, grid, u) - evaluate_cost(problem, grid, ubar)))
    return 0
