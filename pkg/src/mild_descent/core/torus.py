"""Uniform grid on the one-dimensional torus and the spectral heat semigroup.

States are real samples at the nodes ``theta_i = 2*pi*i/n``. The heat
semigroup acts diagonally on the real-FFT coefficients, so composing two
actions multiplies the multipliers exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError
from .problem import ProblemSpec, SemigroupAction, StateField

# Recorded in run manifests.
STEPPER_VARIANT = "exponential-euler: x + dt*F propagated by exp(dt*A)"


@dataclass(frozen=True)
class TorusGrid:
    n: int

    def __post_init__(self) -> None:
        if self.n < 4 or self.n % 2:
            raise DimensionError(f"torus grid needs an even number of nodes >= 4, got {self.n}")

    @cached_property
    def nodes(self) -> NDArray[np.float64]:
        arr = 2.0 * np.pi * np.arange(self.n) / self.n
        arr.setflags(write=False)
        return arr

    @property
    def weight(self) -> float:
        return 2.0 * math.pi / self.n

    @cached_property
    def wavenumbers(self) -> NDArray[np.float64]:
        """Integer wavenumbers of the real-FFT layout, 0..n/2."""
        arr = np.arange(self.n // 2 + 1, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    def integrate(self, x: StateField) -> float:
        return self.weight * float(np.sum(x))

    def inner(self, x: StateField, y: StateField) -> float:
        return self.weight * float(np.dot(x, y))

    def require_field(self, x: StateField) -> None:
        if np.shape(x)[-1:] != (self.n,):
            raise DimensionError(f"field has shape {np.shape(x)}, expected trailing length {self.n}")


@lru_cache(maxsize=256)
def _heat_multipliers(n: int, nu: float, tau: float) -> NDArray[np.float64]:
    k = np.arange(n // 2 + 1, dtype=np.float64)
    mult = np.exp(-nu * k * k * tau)
    mult.setflags(write=False)
    return mult


@dataclass(frozen=True)
class SpectralHeatSemigroup:
    """S_tau = exp(tau * nu * d^2/dtheta^2) on a :class:`TorusGrid`."""

    grid: TorusGrid
    nu: float

    def __post_init__(self) -> None:
        if not self.nu > 0:
            raise ValueError("nu must be > 0")

    def multipliers(self, tau: float) -> NDArray[np.float64]:
        return _heat_multipliers(self.grid.n, float(self.nu), float(tau))

    def apply(self, tau: float, x: StateField) -> StateField:
        return heat_apply(self.grid, self, tau, x)


def heat_apply(grid: TorusGrid, sg: SpectralHeatSemigroup, tau: float, x: StateField) -> StateField:
    """Scale the Fourier coefficients of ``x`` by exp(-nu k^2 tau)."""
    if tau < 0:
        raise ValueError(f"semigroup duration must be >= 0, got {tau}")
    grid.require_field(x)
    if tau == 0:
        return np.array(x, dtype=np.float64)
    coeffs = np.fft.rfft(x, axis=-1)
    return np.fft.irfft(coeffs * sg.multipliers(tau), n=grid.n, axis=-1)


def exp_euler_step(
    problem: ProblemSpec,
    sg: SemigroupAction,
    dt: float,
    t: float,
    x: StateField,
    u_val: NDArray[np.float64],
) -> StateField:
    """One exponential Euler step of the mild equation.

    Returns S_dt x + dt * S_dt F_t(x, u); the forcing is frozen at the left
    node and carried through the full-step semigroup.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    problem.require_state(x)
    u_val = np.asarray(u_val, dtype=np.float64)
    if u_val.shape != (problem.n_controls,):
        raise DimensionError(f"control value has shape {u_val.shape}, expected ({problem.n_controls},)")
    return advance(sg, dt, x, problem.forcing(t, x, u_val))


def advance(sg: SemigroupAction, dt: float, x: StateField, forcing: StateField) -> StateField:
    """Unchecked core of :func:`exp_euler_step`."""
    return sg.apply(dt, x + dt * forcing)


def l2_distance_sq(grid: TorusGrid, x: StateField, y: StateField) -> float:
    """Rectangle-rule approximation of the squared L^2 distance."""
    if np.shape(x) != np.shape(y):
        raise DimensionError(f"shapes differ: {np.shape(x)} vs {np.shape(y)}")
    grid.require_field(x)
    diff = np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64)
    return grid.weight * float(np.dot(diff, diff))
