"""Problem data model: problem description, control signals, time grids."""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    AdmissibilityError,
    DimensionError,
    GridAlignmentError,
    HorizonMismatchError,
)

StateField = NDArray[np.float64]

# Maps used by ProblemSpec. Derivative maps take the direction as last argument.
DriftMap = Callable[[float, StateField], StateField]
DriftDerivative = Callable[[float, StateField, StateField], StateField]
GainMap = Callable[[float, StateField], NDArray[np.float64]]
GainDerivative = Callable[[float, StateField, StateField], NDArray[np.float64]]
CostMap = Callable[[StateField], float]
GradientMap = Callable[[StateField], StateField]
InnerProduct = Callable[[StateField, StateField], float]

# Relative slack when testing |u| <= R, absorbs the rounding of R*v/|v|.
_BALL_SLACK = 1e-12


def _frozen(values: ArrayLike, ndim: int, name: str) -> NDArray[np.float64]:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class SemigroupAction(Protocol):
    """Action of the linear semigroup S_tau on a state."""

    def apply(self, tau: float, x: StateField) -> StateField: ...


@dataclass(frozen=True, eq=False)
class Channel:
    """One control channel: gain g^j_t(x) in R^m and spatial profile h^j in X."""

    profile: StateField
    gain: GainMap
    gain_derivative: Optional[GainDerivative] = None
    fixed_gain: Optional[NDArray[np.float64]] = None

    @classmethod
    def fixed(cls, gain: ArrayLike, profile: ArrayLike) -> Channel:
        """Channel whose gain does not depend on (t, x)."""
        vec = _frozen(gain, 1, "gain")
        return cls(
            profile=_frozen(profile, 1, "profile"),
            gain=lambda t, x: vec,
            fixed_gain=vec,
        )


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Full description of one control problem.

    The control operator has the finite-channel form
    ``G_t(x) u = sum_j (u . g^j_t(x)) h^j``; controls live in the ball of
    radius ``radius`` in R^m, m being the number of channels.
    """

    state_dim: int
    semigroup: SemigroupAction
    channels: tuple[Channel, ...]
    terminal_cost: CostMap
    terminal_gradient: GradientMap
    alpha: float
    radius: float
    horizon: float
    x0: StateField
    drift: Optional[DriftMap] = None
    drift_derivative: Optional[DriftDerivative] = None
    inner: Optional[InnerProduct] = None
    divergence_bound: Optional[float] = None
    name: str = "problem"

    def __post_init__(self) -> None:
        if self.state_dim < 1:
            raise DimensionError("state_dim must be >= 1")
        if len(self.channels) < 1:
            raise ValueError("at least one control channel is required")
        if not self.alpha >= 0:
            raise ValueError("alpha must be >= 0")
        if not self.radius > 0:
            raise ValueError("radius must be > 0")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "x0", _frozen(self.x0, 1, "x0"))
        self.require_state(self.x0, "x0")
        m = len(self.channels)
        for j, ch in enumerate(self.channels):
            if ch.profile.shape != (self.state_dim,):
                raise DimensionError(
                    f"profile of channel {j + 1} has shape {ch.profile.shape}, "
                    f"expected ({self.state_dim},)"
                )
            if ch.fixed_gain is not None and ch.fixed_gain.shape != (m,):
                raise DimensionError(f"gain of channel {j + 1} must have length {m}")

    @property
    def n_controls(self) -> int:
        return len(self.channels)

    @cached_property
    def profiles(self) -> NDArray[np.float64]:
        """Channel profiles stacked as rows, shape (m, state_dim)."""
        mat = np.vstack([ch.profile for ch in self.channels])
        mat.setflags(write=False)
        return mat

    @cached_property
    def fixed_gains(self) -> Optional[NDArray[np.float64]]:
        """Gain matrix with rows g^j when no gain depends on (t, x)."""
        if any(ch.fixed_gain is None for ch in self.channels):
            return None
        mat = np.vstack([ch.fixed_gain for ch in self.channels])
        mat.setflags(write=False)
        return mat

    def gain_matrix(self, t: float, x: StateField) -> NDArray[np.float64]:
        """Rows are g^j_t(x), shape (m, m)."""
        fixed = self.fixed_gains
        if fixed is not None:
            return fixed
        return np.vstack([np.asarray(ch.gain(t, x), dtype=np.float64) for ch in self.channels])

    def control_action(self, t: float, x: StateField, u_val: NDArray[np.float64]) -> StateField:
        """G_t(x) u as an element of X."""
        return (self.gain_matrix(t, x) @ u_val) @ self.profiles

    def forcing(self, t: float, x: StateField, u_val: NDArray[np.float64]) -> StateField:
        """F_t(x, u) = f_t(x) + G_t(x) u."""
        out = self.control_action(t, x, u_val)
        if self.drift is not None:
            out = out + self.drift(t, x)
        return out

    def inner_product(self, x: StateField, y: StateField) -> float:
        if self.inner is not None:
            return float(self.inner(x, y))
        return float(np.dot(x, y))

    def require_state(self, x: StateField, name: str = "state") -> None:
        if np.shape(x) != (self.state_dim,):
            raise DimensionError(f"{name} has shape {np.shape(x)}, expected ({self.state_dim},)")

    def require_admissible(self, u: ControlSignal) -> None:
        if u.n_controls != self.n_controls:
            raise DimensionError(
                f"control has {u.n_controls} components, problem has {self.n_controls} channels"
            )
        if not math.isclose(u.horizon, self.horizon, rel_tol=1e-12):
            raise HorizonMismatchError(f"control horizon {u.horizon} != problem horizon {self.horizon}")
        peak = u.max_norm()
        if peak > self.radius * (1 + _BALL_SLACK):
            raise AdmissibilityError(f"control norm {peak:.6g} exceeds radius {self.radius:.6g}")


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Piecewise-constant control; ``values[k]`` is held on [t_k, t_{k+1})."""

    partition: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        partition = _frozen(self.partition, 1, "partition")
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DimensionError(f"control values must be 2-dimensional, got shape {values.shape}")
        values.setflags(write=False)
        if partition.size < 2:
            raise ValueError("partition needs at least two breakpoints")
        if partition[0] != 0.0:
            raise ValueError("partition must start at 0")
        if not np.all(np.diff(partition) > 0):
            raise ValueError("partition must be strictly increasing")
        if values.shape[0] != partition.size - 1:
            raise DimensionError(
                f"{partition.size - 1} intervals but {values.shape[0]} control values"
            )
        if values.shape[1] < 1:
            raise DimensionError("controls need at least one component")
        if not np.all(np.isfinite(values)):
            raise ValueError("control values must be finite")
        object.__setattr__(self, "partition", partition)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, partition: ArrayLike, value: ArrayLike) -> ControlSignal:
        part = np.asarray(partition, dtype=np.float64)
        vec = np.atleast_1d(np.asarray(value, dtype=np.float64))
        return cls(part, np.tile(vec, (part.size - 1, 1)))

    @classmethod
    def zeros(cls, partition: ArrayLike, n_controls: int) -> ControlSignal:
        part = np.asarray(partition, dtype=np.float64)
        return cls(part, np.zeros((part.size - 1, n_controls)))

    @property
    def horizon(self) -> float:
        return float(self.partition[-1])

    @property
    def n_intervals(self) -> int:
        return self.values.shape[0]

    @property
    def n_controls(self) -> int:
        return self.values.shape[1]

    def interval_index(self, t: ArrayLike) -> NDArray[np.intp]:
        idx = np.searchsorted(self.partition, t, side="right") - 1
        return np.clip(idx, 0, self.n_intervals - 1)

    def __call__(self, t: float) -> NDArray[np.float64]:
        """Value at t; right-continuous, the last value at t = T."""
        if t < 0 or t > self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        return self.values[int(self.interval_index(t))]

    def sample(self, times: ArrayLike) -> NDArray[np.float64]:
        """Values at many times at once, shape (len(times), m)."""
        return self.values[self.interval_index(np.asarray(times, dtype=np.float64))]

    def energy(self) -> float:
        """Exact integral of |u(t)|^2 over [0, T]."""
        widths = np.diff(self.partition)
        return float(np.sum(np.sum(self.values**2, axis=1) * widths))

    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def refine(self, breakpoints: ArrayLike) -> ControlSignal:
        """Same function on the union of its partition and ``breakpoints``."""
        extra = np.asarray(breakpoints, dtype=np.float64)
        extra = extra[(extra >= 0.0) & (extra <= self.horizon)]
        part = np.union1d(self.partition, extra)
        return ControlSignal(part, self.sample(part[:-1]))

    def same_function(self, other: ControlSignal) -> bool:
        if not math.isclose(self.horizon, other.horizon, rel_tol=1e-12):
            return False
        part = np.union1d(self.partition, other.partition)
        return bool(np.array_equal(self.sample(part[:-1]), other.sample(part[:-1])))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ControlSignal):
            return NotImplemented
        return bool(
            np.array_equal(self.partition, other.partition)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]


def concat_control(u: ControlSignal, ubar: ControlSignal, s: float) -> ControlSignal:
    """u on [0, s), ubar on [s, T]."""
    if not math.isclose(u.horizon, ubar.horizon, rel_tol=1e-12):
        raise HorizonMismatchError(f"horizons differ: {u.horizon} vs {ubar.horizon}")
    if u.n_controls != ubar.n_controls:
        raise DimensionError("controls have different numbers of components")
    if s < 0 or s > u.horizon:
        raise ValueError(f"s={s} outside [0, {u.horizon}]")
    part = np.union1d(np.union1d(u.partition, ubar.partition), [s])
    part = part[part <= u.horizon]
    left = part[:-1]
    values = np.where((left < s)[:, None], u.sample(left), ubar.sample(left))
    return ControlSignal(part, values)


@dataclass(frozen=True)
class TimeGrid:
    """Fine integration grid whose nodes contain every control breakpoint.

    The control partition is uniform with ``n_intervals`` pieces and each
    piece carries ``steps_per_interval`` exponential Euler steps.
    """

    horizon: float
    n_intervals: int
    steps_per_interval: int

    def __post_init__(self) -> None:
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.n_intervals < 1:
            raise ValueError("n_intervals must be >= 1")
        if self.steps_per_interval < 1:
            raise ValueError("steps_per_interval must be >= 1")

    @classmethod
    def from_step(cls, horizon: float, n_intervals: int, dt: float) -> TimeGrid:
        """Largest aligned step not exceeding ``dt``."""
        if not dt > 0:
            raise ValueError("dt must be > 0")
        ratio = horizon / n_intervals / dt
        spi = max(1, math.ceil(ratio - 1e-9 * ratio))
        return cls(horizon, n_intervals, spi)

    @property
    def n_steps(self) -> int:
        return self.n_intervals * self.steps_per_interval

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @cached_property
    def times(self) -> NDArray[np.float64]:
        arr = np.linspace(0.0, self.horizon, self.n_steps + 1)
        arr.setflags(write=False)
        return arr

    @cached_property
    def control_partition(self) -> NDArray[np.float64]:
        arr = self.times[:: self.steps_per_interval].copy()
        arr.setflags(write=False)
        return arr

    def interval_nodes(self, k: int) -> tuple[int, int]:
        """Fine-node indices bounding control interval k."""
        return k * self.steps_per_interval, (k + 1) * self.steps_per_interval

    def node_index(self, t: float) -> int:
        """Index of the node equal to t (up to representation error)."""
        idx = int(round(t / self.dt))
        if idx < 0 or idx > self.n_steps:
            raise GridAlignmentError(f"t={t!r} outside [0, {self.horizon}]")
        if abs(self.times[idx] - t) > 4 * np.spacing(self.horizon):
            raise GridAlignmentError(f"t={t!r} is not a fine-grid node (dt={self.dt!r})")
        return idx

    def require_aligned(self, u: ControlSignal) -> None:
        if not math.isclose(u.horizon, self.horizon, rel_tol=1e-12):
            raise HorizonMismatchError(f"control horizon {u.horizon} != grid horizon {self.horizon}")
        for t in u.partition:
            self.node_index(float(t))

    def zero_control(self, n_controls: int) -> ControlSignal:
        return ControlSignal.zeros(self.control_partition, n_controls)

    def control_from_values(self, values: ArrayLike) -> ControlSignal:
        return ControlSignal(self.control_partition, np.asarray(values, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States of a discrete mild solution at the fine nodes of [s, T]."""

    times: NDArray[np.float64]
    states: NDArray[np.float64]
    first_node: int = 0

    @property
    def terminal(self) -> StateField:
        return self.states[-1]

    def at_node(self, index: int) -> StateField:
        """State at absolute grid node ``index``."""
        return self.states[index - self.first_node]

