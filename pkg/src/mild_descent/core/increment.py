"""Backward-cost probes, the reduced Hamiltonian and the exact cost increment.

The backward cost p_t(x) = l(Phi_{t,T}(x)) is the terminal payoff reached
from state x at time t under the baseline control. Its directional
derivatives along the channel profiles are approximated by finite
differences of whole flows; no adjoint equation is solved.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Optional

import numpy as np
from numpy.typing import NDArray

from ..utils.pool import ordered_map, probe_workers
from .errors import AdmissibilityError
from .flow import march, propagate, step_controls
from .problem import ControlSignal, ProblemSpec, StateField, TimeGrid

logger = logging.getLogger(__name__)

ProbeScheme = Literal["forward", "central"]


@dataclass(frozen=True, eq=False)
class BackwardProbe:
    """Finite-difference probe of the backward cost of ``baseline``."""

    problem: ProblemSpec
    grid: TimeGrid
    baseline: ControlSignal
    epsilon: float = 1e-3
    scheme: ProbeScheme = "forward"
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.scheme not in ("forward", "central"):
            raise ValueError(f"unknown probe scheme {self.scheme!r}")
        self.problem.require_admissible(self.baseline)
        self.grid.require_aligned(self.baseline)

    @cached_property
    def _controls(self) -> NDArray[np.float64]:
        return step_controls(self.grid, self.baseline, 0, self.grid.n_steps)

    def backward_cost(self, node: int, x: StateField) -> float:
        """p_t(x) with t the time of grid node ``node``."""
        end = self.grid.n_steps
        x_T, _ = march(self.problem, self.grid, self._controls[node:], node, end, x)
        return float(self.problem.terminal_cost(x_T))


def probe_xi(probe: BackwardProbe, t: float, x: StateField) -> NDArray[np.float64]:
    """Difference quotients of the backward cost along each profile h^j."""
    problem = probe.problem
    problem.require_state(x)
    node = probe.grid.node_index(t)
    eps = probe.epsilon
    profiles = problem.profiles
    workers = probe_workers() if probe.workers is None else probe.workers

    if probe.scheme == "forward":
        starts = [np.asarray(x, dtype=np.float64)] + [x + eps * h for h in profiles]
    else:
        starts = [x + eps * h for h in profiles] + [x - eps * h for h in profiles]
    values = np.array(ordered_map(lambda y: probe.backward_cost(node, y), starts, workers))

    if probe.scheme == "forward":
        xi = (values[1:] - values[0]) / eps
    else:
        m = problem.n_controls
        xi = (values[:m] - values[m:]) / (2 * eps)
    logger.debug("probe at t=%.6g: xi=%s", t, xi)
    return xi


def channel_gradient(probe: BackwardProbe, t: float, x: StateField) -> NDArray[np.float64]:
    """sum_j xi_j(t, x) g^j_t(x), the probe estimate of G_t(x)' Dp_t(x)."""
    xi = probe_xi(probe, t, x)
    return probe.problem.gain_matrix(t, x).T @ xi


@dataclass(frozen=True, eq=False)
class HamiltonianEval:
    value: float
    gradient_channel: NDArray[np.float64]
    control: NDArray[np.float64]
    alpha: float

    def recompute(self) -> float:
        return hamiltonian_value(self.alpha, self.gradient_channel, self.control)

    @property
    def w(self) -> Optional[NDArray[np.float64]]:
        """Unconstrained minimizer -grad/alpha; None when alpha = 0."""
        if self.alpha == 0:
            return None
        return -self.gradient_channel / self.alpha


def hamiltonian_value(alpha: float, grad_channel: NDArray[np.float64], u_val: NDArray[np.float64]) -> float:
    return 0.5 * alpha * float(np.dot(u_val, u_val)) + float(np.dot(u_val, grad_channel))


def reduced_hamiltonian(
    problem: ProblemSpec,
    grad_channel: NDArray[np.float64],
    u_val: NDArray[np.float64],
) -> HamiltonianEval:
    """(alpha/2)|u|^2 + u . grad_channel."""
    u_val = np.asarray(u_val, dtype=np.float64)
    grad_channel = np.asarray(grad_channel, dtype=np.float64)
    if np.linalg.norm(u_val) > problem.radius * (1 + 1e-12):
        raise AdmissibilityError(f"|u|={np.linalg.norm(u_val):.6g} exceeds radius {problem.radius:.6g}")
    return HamiltonianEval(
        value=hamiltonian_value(problem.alpha, grad_channel, u_val),
        gradient_channel=grad_channel,
        control=u_val,
        alpha=problem.alpha,
    )


def midpoint_nodes(i_a: int, i_b: int) -> tuple[int, ...]:
    """Node(s) at the middle of the steps i_a..i_b-1 that carry one control value."""
    lo, rem = divmod(i_a + i_b - 1, 2)
    return (lo,) if rem == 0 else (lo, lo + 1)


def exact_increment(
    problem: ProblemSpec,
    grid: TimeGrid,
    ubar: ControlSignal,
    u: ControlSignal,
    epsilon: float = 1e-3,
    scheme: ProbeScheme = "forward",
    workers: Optional[int] = None,
) -> float:
    """Increment I[u] - I[ubar] from the Hamiltonian representation.

    Integrates H(x_t, u(t)) - H(x_t, ubar(t)) along the trajectory of ``u``
    with the composite midpoint rule over the pieces of the merged
    partition. Pieces where both controls agree contribute exactly zero and
    are not probed.
    """
    problem.require_admissible(u)
    grid.require_aligned(u)
    probe = BackwardProbe(problem, grid, ubar, epsilon=epsilon, scheme=scheme, workers=workers)
    part = np.union1d(u.partition, ubar.partition)
    left = part[:-1]
    u_vals = u.sample(left)
    ub_vals = ubar.sample(left)
    changed = np.any(u_vals != ub_vals, axis=1)
    if not changed.any():
        return 0.0

    traj = propagate(problem, grid, u, 0.0, problem.x0)
    total = 0.0
    for k in np.flatnonzero(changed):
        a, b = float(part[k]), float(part[k + 1])
        nodes = midpoint_nodes(grid.node_index(a), grid.node_index(b))
        grads = [channel_gradient(probe, float(grid.times[i]), traj.at_node(i)) for i in nodes]
        grad = grads[0] if len(grads) == 1 else 0.5 * (grads[0] + grads[1])
        delta = hamiltonian_value(problem.alpha, grad, u_vals[k]) - hamiltonian_value(
            problem.alpha, grad, ub_vals[k]
        )
        total += (b - a) * delta
    logger.debug("exact increment %.10g over %d changed pieces", total, int(changed.sum()))
    return total


def backward_invariance_residual(
    problem: ProblemSpec,
    grid: TimeGrid,
    ubar: ControlSignal,
    stride: int = 1,
) -> float:
    """max_t |p_t(xbar_t) - l(xbar_T)| over every ``stride``-th node."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    probe = BackwardProbe(problem, grid, ubar)
    traj = propagate(problem, grid, ubar, 0.0, problem.x0)
    reference = float(problem.terminal_cost(traj.terminal))
    nodes = list(range(0, grid.n_steps + 1, stride))
    if nodes[-1] != grid.n_steps:
        nodes.append(grid.n_steps)
    return max(abs(probe.backward_cost(i, traj.at_node(i)) - reference) for i in nodes)
