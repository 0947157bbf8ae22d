"""Discrete mild flow: propagation and cost evaluation."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from .errors import DivergenceError
from .problem import ControlSignal, ProblemSpec, StateField, TimeGrid, Trajectory
from .torus import advance

logger = logging.getLogger(__name__)


def step_controls(grid: TimeGrid, u: ControlSignal, i0: int, i1: int) -> NDArray[np.float64]:
    """Control value used on each fine step i0..i1-1.

    Sampled at step midpoints so breakpoints off by a rounding unit still
    select the right piece.
    """
    mids = grid.times[i0:i1] + 0.5 * grid.dt
    return u.sample(mids)


def march(
    problem: ProblemSpec,
    grid: TimeGrid,
    controls: NDArray[np.float64],
    i0: int,
    i1: int,
    x: StateField,
    record: bool = False,
) -> tuple[StateField, Optional[NDArray[np.float64]]]:
    """Exponential Euler from node i0 to node i1 with per-step ``controls``.

    Each step depends only on its node, its state and its control value, so
    restarting from an intermediate node reproduces the states exactly.
    """
    if controls.shape[0] != i1 - i0:
        raise ValueError(f"need {i1 - i0} control rows, got {controls.shape[0]}")
    sg = problem.semigroup
    dt = grid.dt
    times = grid.times
    drift = problem.drift
    bound = problem.divergence_bound
    fixed = problem.fixed_gains is not None

    x = np.array(x, dtype=np.float64)
    states = np.empty((i1 - i0 + 1, x.size)) if record else None
    if states is not None:
        states[0] = x
    prev_u: Optional[NDArray[np.float64]] = None
    action: Optional[StateField] = None
    for n in range(i1 - i0):
        t = float(times[i0 + n])
        u_n = controls[n]
        if fixed:
            if prev_u is None or not np.array_equal(u_n, prev_u):
                action = problem.control_action(t, x, u_n)
                prev_u = u_n
            forcing = action if drift is None else action + drift(t, x)
        else:
            forcing = problem.forcing(t, x, u_n)
        x = advance(sg, dt, x, forcing)
        peak = float(np.max(np.abs(x)))
        if not (peak <= bound if bound is not None else np.isfinite(peak)):
            t_next = float(times[i0 + n + 1])
            raise DivergenceError(
                f"{problem.name}: state norm {peak:.3g} exceeded bound {bound} at t={t_next:.6g}",
                time=t_next,
            )
        if states is not None:
            states[n + 1] = x
    return x, states


def propagate(
    problem: ProblemSpec,
    grid: TimeGrid,
    u: ControlSignal,
    s: float,
    xs: StateField,
    until: Optional[float] = None,
) -> Trajectory:
    """Discrete mild solution on [s, until] (``until`` defaults to T)."""
    problem.require_state(xs, "initial state")
    problem.require_admissible(u)
    grid.require_aligned(u)
    i0 = grid.node_index(s)
    i1 = grid.n_steps if until is None else grid.node_index(until)
    if i1 < i0:
        raise ValueError(f"end time {until} precedes start time {s}")
    _, states = march(problem, grid, step_controls(grid, u, i0, i1), i0, i1, xs, record=True)
    assert states is not None
    states.setflags(write=False)
    times = grid.times[i0 : i1 + 1]
    return Trajectory(times=times, states=states, first_node=i0)


def terminal_state(
    problem: ProblemSpec,
    grid: TimeGrid,
    u: ControlSignal,
    s: float = 0.0,
    xs: Optional[StateField] = None,
) -> StateField:
    """Like :func:`propagate` but keeps only the state at T."""
    xs = problem.x0 if xs is None else xs
    problem.require_state(xs, "initial state")
    problem.require_admissible(u)
    grid.require_aligned(u)
    i0 = grid.node_index(s)
    x, _ = march(problem, grid, step_controls(grid, u, i0, grid.n_steps), i0, grid.n_steps, xs)
    return x


def cost_from_terminal(problem: ProblemSpec, u: ControlSignal, x_T: StateField) -> float:
    return float(problem.terminal_cost(x_T)) + 0.5 * problem.alpha * u.energy()


def evaluate_cost(problem: ProblemSpec, grid: TimeGrid, u: ControlSignal) -> float:
    """l(x_T) + (alpha/2) * integral of |u|^2, the integral summed exactly."""
    cost = cost_from_terminal(problem, u, terminal_state(problem, grid, u))
    logger.debug("%s: cost %.10g", problem.name, cost)
    return cost
