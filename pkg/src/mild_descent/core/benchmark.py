"""Reaction-diffusion benchmark on the torus.

    d_t rho = nu rho_thth + beta rho (1 - rho) + u1(t) cos(th)/sqrt(pi) + u2(t) sin(th)/sqrt(pi)

with terminal cost (1/2)||rho_T - target||^2 and controls in the ball of
radius R in R^2.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .config import RDConfig
from .descent import DescentConfig, DescentReport, run_descent
from .flow import cost_from_terminal, terminal_state
from .problem import Channel, ControlSignal, ProblemSpec, StateField, TimeGrid
from .torus import SpectralHeatSemigroup, TorusGrid, l2_distance_sq

logger = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e6


def torus_grid(cfg: RDConfig) -> TorusGrid:
    return TorusGrid(cfg.n_space)


def time_grid(cfg: RDConfig) -> TimeGrid:
    """Fine grid with the requested dt refined to align with the intervals."""
    return TimeGrid.from_step(cfg.horizon, cfg.n_intervals, cfg.dt)


def initial_profile(theta: NDArray[np.float64]) -> StateField:
    return np.exp(1.5 * np.cos(theta - 1.0))


def target_profile(theta: NDArray[np.float64]) -> StateField:
    return np.exp(2.5 * np.cos(theta - 2.2))


def channel_profiles(grid: TorusGrid) -> NDArray[np.float64]:
    """cos/sqrt(pi) and sin/sqrt(pi), orthonormal in the discrete L^2."""
    scale = 1.0 / math.sqrt(math.pi)
    return np.vstack([scale * np.cos(grid.nodes), scale * np.sin(grid.nodes)])


def build_problem(cfg: RDConfig) -> ProblemSpec:
    grid = torus_grid(cfg)
    target = target_profile(grid.nodes)
    target.setflags(write=False)
    beta = cfg.beta
    profiles = channel_profiles(grid)

    def drift(t: float, x: StateField) -> StateField:
        return beta * x * (1.0 - x)

    def drift_derivative(t: float, x: StateField, h: StateField) -> StateField:
        return beta * (1.0 - 2.0 * x) * h

    def terminal_cost(x: StateField) -> float:
        return 0.5 * l2_distance_sq(grid, x, target)

    def terminal_gradient(x: StateField) -> StateField:
        return x - target

    return ProblemSpec(
        state_dim=grid.n,
        semigroup=SpectralHeatSemigroup(grid, cfg.nu),
        channels=(
            Channel.fixed([1.0, 0.0], profiles[0]),
            Channel.fixed([0.0, 1.0], profiles[1]),
        ),
        terminal_cost=terminal_cost,
        terminal_gradient=terminal_gradient,
        alpha=cfg.alpha,
        radius=cfg.radius,
        horizon=cfg.horizon,
        x0=initial_profile(grid.nodes),
        drift=drift,
        drift_derivative=drift_derivative,
        inner=grid.inner,
        divergence_bound=DIVERGENCE_BOUND,
        name="reaction-diffusion",
    )


def descent_config(cfg: RDConfig, workers: Optional[int] = None) -> DescentConfig:
    return DescentConfig(
        n_intervals=cfg.n_intervals,
        epsilon=cfg.epsilon,
        max_iters=max(cfg.outer_iters, 1),
        workers=workers,
    )


def reproduce(
    cfg: RDConfig,
    u0: Optional[ControlSignal] = None,
    workers: Optional[int] = None,
) -> DescentReport:
    """
    Run the descent on the benchmark.

    Args:
        cfg: Benchmark parameters
        u0: Starting control; zero when omitted
        workers: Probe threads; None reads MILD_DESCENT_THREADS

    Returns:
        Report whose history has ``outer_iters + 1`` entries unless the
        run stopped early
    """
    problem = build_problem(cfg)
    grid = time_grid(cfg)
    if u0 is None:
        u0 = grid.zero_control(problem.n_controls)
    logger.info(
        "benchmark: n=%d, dt=%.6g (%d steps per interval), N=%d",
        cfg.n_space, grid.dt, grid.steps_per_interval, grid.n_intervals,
    )
    if cfg.outer_iters == 0:
        x_T = terminal_state(problem, grid, u0)
        report = DescentReport()
        report.cost_history.append(cost_from_terminal(problem, u0, x_T))
        report.controls.append(u0)
        report.terminal_states.append(x_T)
        return report
    return run_descent(problem, grid, descent_config(cfg, workers), u0)
