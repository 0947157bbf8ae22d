"""Variational equation, Jacobian-vector products and a linear test problem.

The tangent J_{s,t}(x)h is marched alongside the baseline state with the
same exponential Euler rule, so it is the exact derivative of the discrete
flow. Problems must supply ``drift_derivative`` and, for gains that depend
on the state, ``Channel.gain_derivative``.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import expm

from .errors import DimensionError, MissingDerivativeError
from .flow import propagate, step_controls, terminal_state
from .increment import midpoint_nodes
from .problem import Channel, ControlSignal, ProblemSpec, StateField, TimeGrid
from .torus import advance

MAX_ORACLE_DIM = 4


def _require_derivatives(problem: ProblemSpec) -> None:
    if problem.drift is not None and problem.drift_derivative is None:
        raise MissingDerivativeError("drift_derivative")
    for j, ch in enumerate(problem.channels):
        if ch.fixed_gain is None and ch.gain_derivative is None:
            raise MissingDerivativeError(f"channels[{j}].gain_derivative")


def _tangent_forcing(
    problem: ProblemSpec, t: float, x: StateField, v: StateField, u_val: NDArray[np.float64]
) -> StateField:
    """Df_t(x) v + DG_t(x)[v] u."""
    out = np.zeros_like(v)
    if problem.drift_derivative is not None and problem.drift is not None:
        out = out + problem.drift_derivative(t, x, v)
    if problem.fixed_gains is None:
        coeffs = np.zeros(problem.n_controls)
        for j, ch in enumerate(problem.channels):
            if ch.gain_derivative is not None:
                coeffs[j] = float(np.dot(u_val, ch.gain_derivative(t, x, v)))
        out = out + coeffs @ problem.profiles
    return out


def tangent_flow(
    problem: ProblemSpec,
    grid: TimeGrid,
    ubar: ControlSignal,
    s: float,
    x: StateField,
    directions: ArrayLike,
    until: Optional[float] = None,
) -> tuple[StateField, NDArray[np.float64]]:
    """Baseline state and tangents J_{s,t}(x)h for each row of ``directions``."""
    _require_derivatives(problem)
    problem.require_state(x)
    problem.require_admissible(ubar)
    grid.require_aligned(ubar)
    tangents = np.array(directions, dtype=np.float64, ndmin=2)
    if tangents.shape[1] != problem.state_dim:
        raise DimensionError(f"directions have length {tangents.shape[1]}, expected {problem.state_dim}")
    i0 = grid.node_index(s)
    i1 = grid.n_steps if until is None else grid.node_index(until)
    controls = step_controls(grid, ubar, i0, i1)
    sg = problem.semigroup
    dt = grid.dt
    state = np.array(x, dtype=np.float64)
    for n in range(i1 - i0):
        t = float(grid.times[i0 + n])
        u_n = controls[n]
        for r in range(tangents.shape[0]):
            tangents[r] = advance(sg, dt, tangents[r], _tangent_forcing(problem, t, state, tangents[r], u_n))
        state = advance(sg, dt, state, problem.forcing(t, state, u_n))
    return state, tangents


def jvp(
    problem: ProblemSpec,
    grid: TimeGrid,
    ubar: ControlSignal,
    s: float,
    x: StateField,
    h: StateField,
    until: Optional[float] = None,
) -> StateField:
    """J_{s,T}(x) h along the baseline flow (J_{s,until} when given)."""
    _, tangents = tangent_flow(problem, grid, ubar, s, x, h, until=until)
    return tangents[0]


def dp_probe_vs_jvp(
    problem: ProblemSpec,
    grid: TimeGrid,
    ubar: ControlSignal,
    t: float,
    x: StateField,
    h: StateField,
    epsilon: float = 1e-3,
) -> tuple[float, float]:
    """Forward difference of l o Phi_{t,T} along h, and <grad l, J h>."""
    i0 = grid.node_index(t)
    base = terminal_state(problem, grid, ubar, s=float(grid.times[i0]), xs=x)
    shifted = terminal_state(problem, grid, ubar, s=float(grid.times[i0]), xs=x + epsilon * np.asarray(h))
    difference = (float(problem.terminal_cost(shifted)) - float(problem.terminal_cost(base))) / epsilon
    end, tangents = tangent_flow(problem, grid, ubar, t, x, h)
    derivative = problem.inner_product(problem.terminal_gradient(end), tangents[0])
    return difference, derivative


def backward_cost_derivative(
    problem: ProblemSpec, grid: TimeGrid, ubar: ControlSignal, t: float, x: StateField
) -> NDArray[np.float64]:
    """Dp_t(x)[h^j] for every channel profile, via the variational equation."""
    end, tangents = tangent_flow(problem, grid, ubar, t, x, problem.profiles)
    grad = problem.terminal_gradient(end)
    return np.array([problem.inner_product(grad, v) for v in tangents])


def increment_identity_residual(
    problem: ProblemSpec, grid: TimeGrid, ubar: ControlSignal, u: ControlSignal
) -> float:
    """|midpoint quadrature of dp_t(x_t)/dt - (l(x_T) - l(xbar_T))|.

    The derivative along the trajectory of ``u`` is
    (u - ubar)' G_t(x_t)' Dp_t(x_t), with Dp from the variational equation.
    """
    part = np.union1d(u.partition, ubar.partition)
    left = part[:-1]
    jump = u.sample(left) - ubar.sample(left)
    changed = np.any(jump != 0, axis=1)
    traj = propagate(problem, grid, u, 0.0, problem.x0)
    x_bar_T = terminal_state(problem, grid, ubar)
    direct = float(problem.terminal_cost(traj.terminal)) - float(problem.terminal_cost(x_bar_T))
    if not changed.any():
        return abs(direct)

    quadrature = 0.0
    for k in np.flatnonzero(changed):
        a, b = float(part[k]), float(part[k + 1])
        rates = []
        for i in midpoint_nodes(grid.node_index(a), grid.node_index(b)):
            t_i = float(grid.times[i])
            x_i = traj.at_node(i)
            dp = backward_cost_derivative(problem, grid, ubar, t_i, x_i)
            rates.append(float(jump[k] @ (problem.gain_matrix(t_i, x_i).T @ dp)))
        quadrature += (b - a) * float(np.mean(rates))
    return abs(quadrature - direct)


@dataclass(frozen=True, eq=False)
class MatrixExponentialSemigroup:
    """S_tau = expm(tau * A) for a small dense generator, cached per tau."""

    matrix: NDArray[np.float64]
    _cache: dict[float, NDArray[np.float64]] = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self) -> None:
        mat = np.array(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"generator must be square, got shape {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def exponential(self, tau: float) -> NDArray[np.float64]:
        with self._lock:
            cached = self._cache.get(tau)
            if cached is None:
                cached = expm(tau * self.matrix)
                cached.setflags(write=False)
                self._cache[tau] = cached
        return cached

    def apply(self, tau: float, x: StateField) -> StateField:
        if tau < 0:
            raise ValueError(f"semigroup duration must be >= 0, got {tau}")
        if tau == 0:
            return np.array(x, dtype=np.float64)
        return self.exponential(tau) @ x


@dataclass(frozen=True, eq=False)
class LinearOracle:
    """dx/dt = A x + B u with terminal cost c'x or (1/2)(x - target)'Q(x - target).

    Everything about it has a closed form, which makes it the reference for
    flows, probes, increments and the LQ optimum.
    """

    A: NDArray[np.float64]
    B: NDArray[np.float64]
    x0: NDArray[np.float64]
    horizon: float = 1.0
    alpha: float = 0.1
    radius: float = 10.0
    c: Optional[NDArray[np.float64]] = None
    Q: Optional[NDArray[np.float64]] = None
    target: Optional[NDArray[np.float64]] = None

    def __post_init__(self) -> None:
        A = np.array(self.A, dtype=np.float64)
        B = np.array(self.B, dtype=np.float64, ndmin=2)
        d = A.shape[0]
        if A.shape != (d, d) or not 1 <= d <= MAX_ORACLE_DIM:
            raise DimensionError(f"A must be square with size <= {MAX_ORACLE_DIM}, got {A.shape}")
        if B.shape[0] != d:
            raise DimensionError(f"B must have {d} rows, got {B.shape}")
        if (self.c is None) == (self.Q is None):
            raise ValueError("give exactly one of c (linear cost) or Q (quadratic cost)")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "x0", np.array(self.x0, dtype=np.float64))
        if self.c is not None:
            object.__setattr__(self, "c", np.array(self.c, dtype=np.float64))
        if self.Q is not None:
            object.__setattr__(self, "Q", np.array(self.Q, dtype=np.float64))
            goal = np.zeros(d) if self.target is None else np.array(self.target, dtype=np.float64)
            object.__setattr__(self, "target", goal)

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        dim: int = 2,
        n_controls: int = 1,
        quadratic: bool = False,
        **kwargs: float,
    ) -> LinearOracle:
        A = -0.3 * np.eye(dim) + 0.5 * rng.standard_normal((dim, dim))
        B = rng.standard_normal((dim, n_controls)) / np.sqrt(dim)
        x0 = rng.standard_normal(dim)
        if quadratic:
            return cls(A, B, x0, Q=np.eye(dim), target=rng.standard_normal(dim), **kwargs)
        return cls(A, B, x0, c=rng.standard_normal(dim), **kwargs)

    @classmethod
    def stable(
        cls,
        rng: np.random.Generator,
        dim: int = 2,
        n_controls: int = 1,
        alpha: float = 0.5,
        gap: float = 2.0,
        **kwargs: float,
    ) -> LinearOracle:
        """Quadratic oracle on which sample-and-hold descent is monotone on coarse partitions.

        A is a small perturbation shifted to spectral abscissa -0.05. Channels
        have unit gain. The target sits ``gap`` away from the free terminal
        state, inside the range of B. Requires |B|^2 dt / alpha << 1, and the
        per-iteration control change must dominate the O(dt |A|) drift of the
        channel gradient frozen over an interval.
        """
        A = 0.05 * rng.standard_normal((dim, dim))
        A -= (np.max(np.linalg.eigvals(A).real) + 0.05) * np.eye(dim)
        B = rng.standard_normal((dim, n_controls))
        B /= np.linalg.norm(B, axis=0)
        x0 = rng.standard_normal(dim)
        direction = B @ rng.standard_normal(n_controls)
        horizon = float(kwargs.pop("horizon", 1.0))
        target = expm(horizon * A) @ x0 + gap * direction / np.linalg.norm(direction)
        return cls(A, B, x0, horizon=horizon, alpha=alpha, Q=np.eye(dim), target=target, **kwargs)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n_controls(self) -> int:
        return self.B.shape[1]

    def terminal_cost(self, x: StateField) -> float:
        if self.c is not None:
            return float(self.c @ x)
        assert self.Q is not None and self.target is not None
        e = x - self.target
        return 0.5 * float(e @ self.Q @ e)

    def terminal_gradient(self, x: StateField) -> StateField:
        if self.c is not None:
            return self.c.copy()
        assert self.Q is not None and self.target is not None
        return self.Q @ (x - self.target)

    def problem(self) -> ProblemSpec:
        m = self.n_controls
        channels = tuple(Channel.fixed(np.eye(m)[j], self.B[:, j]) for j in range(m))
        return ProblemSpec(
            state_dim=self.dim,
            semigroup=MatrixExponentialSemigroup(self.A),
            channels=channels,
            terminal_cost=self.terminal_cost,
            terminal_gradient=self.terminal_gradient,
            alpha=self.alpha,
            radius=self.radius,
            horizon=self.horizon,
            x0=self.x0,
            name="linear-oracle",
        )

    def propagator(self, tau: float) -> NDArray[np.float64]:
        return expm(tau * self.A)

    def _piece(self, tau: float, x: StateField, u_val: NDArray[np.float64]) -> StateField:
        # exp([[A, Bu], [0, 0]] tau) carries x and the forced response together.
        d = self.dim
        block = np.zeros((d + 1, d + 1))
        block[:d, :d] = self.A
        block[:d, d] = self.B @ u_val
        return (expm(tau * block) @ np.append(x, 1.0))[:d]

    def closed_form_state(self, u: ControlSignal, t: Optional[float] = None) -> StateField:
        """Exact state at t (default T) from x0 under piecewise-constant u."""
        end = self.horizon if t is None else t
        x = self.x0.copy()
        for k in range(u.n_intervals):
            a, b = float(u.partition[k]), min(float(u.partition[k + 1]), end)
            if b <= a:
                break
            x = self._piece(b - a, x, u.values[k])
        return x

    def closed_form_cost(self, u: ControlSignal) -> float:
        return self.terminal_cost(self.closed_form_state(u)) + 0.5 * self.alpha * u.energy()

    def adjoint_channel_gradient(self, t: float) -> NDArray[np.float64]:
        """B' exp((T-t)A') c for the linear cost."""
        if self.c is None:
            raise ValueError("adjoint gradient is only closed-form for the linear cost")
        return self.B.T @ (self.propagator(self.horizon - t).T @ self.c)

    def gramian(self) -> NDArray[np.float64]:
        """Controllability Gramian over [0, T] by Van Loan's block exponential."""
        d = self.dim
        block = np.zeros((2 * d, 2 * d))
        block[:d, :d] = -self.A
        block[:d, d:] = self.B @ self.B.T
        block[d:, d:] = self.A.T
        F = expm(self.horizon * block)
        return F[d:, d:].T @ F[:d, d:]

    def lq_optimum(self) -> tuple[float, StateField]:
        """Optimal cost and terminal state of the quadratic problem with inactive bound.

        The optimal control is u(t) = -B' exp((T-t)A') Q (x_T - target) / alpha.
        """
        if self.Q is None or self.target is None or not self.alpha > 0:
            raise ValueError("the LQ optimum needs a quadratic cost and alpha > 0")
        W = self.gramian()
        free = self.propagator(self.horizon) @ self.x0
        lhs = np.eye(self.dim) + W @ self.Q / self.alpha
        x_T = np.linalg.solve(lhs, free + W @ self.Q @ self.target / self.alpha)
        lam = self.Q @ (x_T - self.target)
        cost = self.terminal_cost(x_T) + 0.5 * float(lam @ W @ lam) / self.alpha
        return cost, x_T

    def optimal_control_value(self, t: float, x_T: StateField) -> NDArray[np.float64]:
        assert self.Q is not None and self.target is not None
        lam = self.Q @ (x_T - self.target)
        return -(self.B.T @ (self.propagator(self.horizon - t).T @ lam)) / self.alpha
