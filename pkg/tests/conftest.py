"""Shared fixtures."""

from __future__ import annotations

import math

import numpy as np
import pytest

from mild_descent.core.config import RDConfig
from mild_descent.core.problem import Channel, ProblemSpec
from mild_descent.core.torus import SpectralHeatSemigroup, TorusGrid
from mild_descent.core.variational import LinearOracle


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def oracle() -> LinearOracle:
    """2-D damped rotation, one actuator, linear terminal cost."""
    return LinearOracle(
        A=np.array([[-0.2, 0.3], [-0.3, -0.2]]),
        B=np.array([[0.0], [1.0]]),
        x0=np.array([1.0, -0.5]),
        horizon=1.0,
        alpha=0.5,
        radius=10.0,
        c=np.array([1.0, 2.0]),
    )


@pytest.fixture
def torus() -> TorusGrid:
    return TorusGrid(32)


def _heat_problem(grid: TorusGrid, nu: float = 0.1, cost=None, alpha: float = 0.2, gain: float = 1.0) -> ProblemSpec:
    """Pure heat equation with the two Fourier actuators."""
    scale = 1.0 / math.sqrt(math.pi)
    cost = cost or (lambda x: 0.0)
    return ProblemSpec(
        state_dim=grid.n,
        semigroup=SpectralHeatSemigroup(grid, nu),
        channels=(
            Channel.fixed([gain, 0.0], scale * np.cos(grid.nodes)),
            Channel.fixed([0.0, gain], scale * np.sin(grid.nodes)),
        ),
        terminal_cost=cost,
        terminal_gradient=lambda x: np.zeros_like(x),
        alpha=alpha,
        radius=20.0,
        horizon=1.0,
        x0=np.cos(grid.nodes),
        inner=grid.inner,
    )


@pytest.fixture
def make_heat_problem():
    return _heat_problem


@pytest.fixture
def small_cfg(tmp_path) -> RDConfig:
    """Coarse benchmark that runs in a second or two."""
    return RDConfig(n_space=32, dt=1e-2, n_intervals=10, outer_iters=2, output_dir=str(tmp_path / "out"))
