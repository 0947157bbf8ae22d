"""Monotone descent by sample-and-hold minimization of the reduced Hamiltonian."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import DescentAborted, DivergenceError
from .flow import cost_from_terminal, march, terminal_state
from .increment import BackwardProbe, channel_gradient, exact_increment, hamiltonian_value
from .problem import ControlSignal, ProblemSpec, StateField, TimeGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DescentConfig:
    """Parameters of the outer loop.

    ``n_intervals`` must match the grid's control partition. With
    ``check_increment`` every accepted iterate is also compared against a
    full midpoint evaluation of the increment formula (m+1 extra flows per
    interval).
    """

    n_intervals: int
    epsilon: float = 1e-3
    max_iters: int = 4
    stall_tol: float = 0.0
    check_increment: bool = False
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n_intervals < 1:
            raise ValueError("n_intervals must be >= 1")
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.stall_tol >= 0:
            raise ValueError("stall_tol must be >= 0")


@dataclass
class RejectedIterate:
    iteration: int
    cost: float
    previous_cost: float


@dataclass
class DescentReport:
    """History of a descent run; entry 0 always belongs to the initial control."""

    cost_history: list[float] = field(default_factory=list)
    controls: list[ControlSignal] = field(default_factory=list)
    terminal_states: list[StateField] = field(default_factory=list)
    predicted_increments: list[float] = field(default_factory=list)
    increment_residuals: list[float] = field(default_factory=list)
    rejections: list[RejectedIterate] = field(default_factory=list)
    stop_reason: str = "max_iters"

    @property
    def iterations(self) -> int:
        return len(self.cost_history) - 1

    @property
    def final_control(self) -> ControlSignal:
        return self.controls[-1]

    def is_monotone(self) -> bool:
        costs = self.cost_history
        return all(b <= a for a, b in zip(costs, costs[1:]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "iterations": self.iterations,
            "cost_history": list(self.cost_history),
            "predicted_increments": list(self.predicted_increments),
            "increment_residuals": list(self.increment_residuals),
            "rejections": [vars(r) for r in self.rejections],
            "stop_reason": self.stop_reason,
        }


def project_ball(radius: float, v: NDArray[np.float64]) -> NDArray[np.float64]:
    """Euclidean projection onto the closed ball of radius ``radius``."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm <= radius:
        return v.copy()
    return (radius / norm) * v


def pointwise_minimizer(
    alpha: float,
    radius: float,
    grad_channel: NDArray[np.float64],
    fallback: Optional[NDArray[np.float64]] = None,
) -> NDArray[np.float64]:
    """Minimizer of u -> (alpha/2)|u|^2 + u . grad over the ball B_R.

    For alpha = 0 with a vanishing gradient every point is a minimizer and
    ``fallback`` (the baseline value) is returned, or zero without one.
    """
    if not radius > 0:
        raise ValueError("radius must be > 0")
    grad = np.asarray(grad_channel, dtype=np.float64)
    if alpha > 0:
        return project_ball(radius, -grad / alpha)
    norm = float(np.linalg.norm(grad))
    if norm > 0:
        return (-radius / norm) * grad
    if fallback is not None:
        return np.array(fallback, dtype=np.float64)
    return np.zeros_like(grad)


@dataclass(frozen=True)
class SweepResult:
    control: ControlSignal
    terminal: StateField
    predicted_increment: float


def _sweep(problem: ProblemSpec, grid: TimeGrid, cfg: DescentConfig, ubar: ControlSignal) -> SweepResult:
    if cfg.n_intervals != grid.n_intervals:
        raise ValueError(
            f"descent uses {cfg.n_intervals} intervals but the grid has {grid.n_intervals}"
        )
    probe = BackwardProbe(problem, grid, ubar, epsilon=cfg.epsilon, workers=cfg.workers)
    m = problem.n_controls
    values = np.zeros((grid.n_intervals, m))
    x = np.array(problem.x0, dtype=np.float64)
    predicted = 0.0
    for k in range(grid.n_intervals):
        i0, i1 = grid.interval_nodes(k)
        t_k = float(grid.times[i0])
        baseline_value = ubar(t_k)
        try:
            grad = channel_gradient(probe, t_k, x)
            values[k] = pointwise_minimizer(problem.alpha, problem.radius, grad, fallback=baseline_value)
            held = np.broadcast_to(values[k], (i1 - i0, m))
            x, _ = march(problem, grid, held, i0, i1, x)
        except DivergenceError as exc:
            raise DescentAborted(
                f"sample-and-hold sweep failed on interval {k}: {exc}",
                partial=values[:k].copy(),
            ) from exc
        width = float(grid.times[i1] - grid.times[i0])
        predicted += width * (
            hamiltonian_value(problem.alpha, grad, values[k])
            - hamiltonian_value(problem.alpha, grad, baseline_value)
        )
        logger.debug("interval %d: u=%s", k, values[k])
    return SweepResult(grid.control_from_values(values), x, predicted)


def sample_and_hold_update(
    problem: ProblemSpec,
    grid: TimeGrid,
    cfg: DescentConfig,
    ubar: ControlSignal,
) -> tuple[ControlSignal, StateField]:
    """One pass of the sample-and-hold update against baseline ``ubar``.

    For each control interval the state is frozen at its left node, the
    channel gradient is probed there with the baseline flow, the minimizing
    value is held over the interval and the state is advanced with it.
    """
    result = _sweep(problem, grid, cfg, ubar)
    return result.control, result.terminal


def run_descent(
    problem: ProblemSpec,
    grid: TimeGrid,
    cfg: DescentConfig,
    u0: ControlSignal,
) -> DescentReport:
    """Iterate :func:`sample_and_hold_update` starting from ``u0``.

    An iterate that raises the cost is rejected and ends the run; an
    accepted decrease below ``stall_tol`` ends it as stalled.
    """
    report = DescentReport()
    x_T = terminal_state(problem, grid, u0)
    report.cost_history.append(cost_from_terminal(problem, u0, x_T))
    report.controls.append(u0)
    report.terminal_states.append(x_T)
    logger.info("%s: iteration 0 cost %.6g", problem.name, report.cost_history[0])

    ubar = u0
    for it in range(1, cfg.max_iters + 1):
        try:
            sweep = _sweep(problem, grid, cfg, ubar)
        except DescentAborted as exc:
            report.stop_reason = "aborted"
            raise DescentAborted(str(exc), partial=report) from exc
        previous = report.cost_history[-1]
        cost = cost_from_terminal(problem, sweep.control, sweep.terminal)

        if cost > previous:
            report.rejections.append(RejectedIterate(it, cost, previous))
            report.stop_reason = "rejected"
            logger.warning(
                "%s: iteration %d raised the cost %.6g -> %.6g; iterate rejected",
                problem.name, it, previous, cost,
            )
            break

        predicted = sweep.predicted_increment
        if cfg.check_increment:
            predicted = exact_increment(
                problem, grid, ubar, sweep.control, epsilon=cfg.epsilon, workers=cfg.workers
            )
        actual = cost - previous
        report.cost_history.append(cost)
        report.controls.append(sweep.control)
        report.terminal_states.append(sweep.terminal)
        report.predicted_increments.append(predicted)
        report.increment_residuals.append(abs(predicted - actual))
        logger.info(
            "%s: iteration %d cost %.6g (increment %.3g, predicted %.3g)",
            problem.name, it, cost, actual, predicted,
        )
        ubar = sweep.control
        if -actual < cfg.stall_tol:
            report.stop_reason = "stalled"
            break
    return report
