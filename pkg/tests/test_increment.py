"""Tests for probes, the reduced Hamiltonian and the exact increment."""

import numpy as np
import pytest

from mild_descent.core.benchmark import build_problem, time_grid
from mild_descent.core.checks import oracle_grid, random_control
from mild_descent.core.errors import AdmissibilityError, ConfigError
from mild_descent.core.flow import evaluate_cost, propagate
from mild_descent.core.increment import (
    BackwardProbe,
    backward_invariance_residual,
    channel_gradient,
    exact_increment,
    hamiltonian_value,
    midpoint_nodes,
    probe_xi,
    reduced_hamiltonian,
)
from mild_descent.core.problem import Channel, ControlSignal, ProblemSpec, TimeGrid
from mild_descent.core.variational import LinearOracle, MatrixExponentialSemigroup, backward_cost_derivative
from mild_descent.utils.pool import THREADS_ENV, ordered_map, probe_workers


def test_constant_payoff_gives_zero_probe(make_heat_problem, torus):
    problem = make_heat_problem(torus, cost=lambda x: 1.5)
    grid = TimeGrid(1.0, 4, 5)
    probe = BackwardProbe(problem, grid, grid.zero_control(2))
    np.testing.assert_array_equal(probe_xi(probe, 0.25, problem.x0), [0.0, 0.0])


def test_probe_of_linear_payoff():
    problem = ProblemSpec(
        state_dim=1,
        semigroup=MatrixExponentialSemigroup(np.zeros((1, 1))),
        channels=(Channel.fixed([2.0], [1.0]),),
        terminal_cost=lambda x: 3.0 * float(x[0]),
        terminal_gradient=lambda x: np.full(1, 3.0),
        alpha=0.0,
        radius=1.0,
        horizon=1.0,
        x0=np.zeros(1),
    )
    grid = TimeGrid(1.0, 2, 4)
    probe = BackwardProbe(problem, grid, grid.zero_control(1))
    assert probe_xi(probe, 0.5, np.array([0.7]))[0] == pytest.approx(3.0, rel=1e-12)
    assert channel_gradient(probe, 0.5, np.array([0.7]))[0] == pytest.approx(6.0, rel=1e-12)


@pytest.mark.parametrize("node", [0, 130, 300])
def test_probe_matches_matrix_exponential(oracle, rng, node):
    problem = oracle.problem()
    grid = TimeGrid(1.0, 10, 30)
    probe = BackwardProbe(problem, grid, random_control(rng, grid, 1))
    t = float(grid.times[node])
    xi = probe_xi(probe, t, rng.standard_normal(2))
    expected = oracle.B.T @ (oracle.propagator(1.0 - t).T @ oracle.c)
    np.testing.assert_allclose(xi, expected, rtol=0, atol=1e-9)
    np.testing.assert_allclose(channel_gradient(probe, t, problem.x0), oracle.adjoint_channel_gradient(t), atol=1e-9)


def test_probe_validation(oracle):
    problem = oracle.problem()
    grid = TimeGrid(1.0, 4, 5)
    u = grid.zero_control(1)
    for eps in (0.0, 1.5):
        with pytest.raises(ValueError):
            BackwardProbe(problem, grid, u, epsilon=eps)
    with pytest.raises(ValueError):
        BackwardProbe(problem, grid, u, scheme="backward")
    with pytest.raises(AdmissibilityError):
        BackwardProbe(problem, grid, ControlSignal.constant(grid.control_partition, [11.0]))


def test_central_beats_forward(small_cfg):
    problem = build_problem(small_cfg)
    grid = time_grid(small_cfg)
    ubar = grid.zero_control(2)
    t = float(grid.control_partition[3])
    x = propagate(problem, grid, ubar, 0.0, problem.x0).at_node(grid.node_index(t))
    reference = backward_cost_derivative(problem, grid, ubar, t, x)
    forward = probe_xi(BackwardProbe(problem, grid, ubar, scheme="forward"), t, x)
    central = probe_xi(BackwardProbe(problem, grid, ubar, scheme="central"), t, x)
    assert np.max(np.abs(central - reference)) < np.max(np.abs(forward - reference))
    np.testing.assert_allclose(forward, reference, rtol=1e-2)


def test_hamiltonian_values():
    assert hamiltonian_value(0.2, np.array([1.0, 0.0]), np.array([3.0, 4.0])) == pytest.approx(5.5)
    assert hamiltonian_value(0.0, np.array([1.0, -2.0]), np.array([1.0, 1.0])) == -1.0


def test_reduced_hamiltonian(oracle):
    problem = oracle.problem()
    ev = reduced_hamiltonian(problem, [2.0], [3.0])
    assert ev.value == pytest.approx(0.25 * 9.0 + 6.0)
    assert ev.recompute() == ev.value
    np.testing.assert_allclose(ev.w, [-4.0])
    with pytest.raises(AdmissibilityError):
        reduced_hamiltonian(problem, [2.0], [10.5])


def test_unconstrained_minimizer_absent_without_regularization(make_heat_problem, torus):
    problem = make_heat_problem(torus, alpha=0.0)
    assert reduced_hamiltonian(problem, [1.0, 1.0], [0.0, 0.0]).w is None


@pytest.mark.parametrize(
    ("i_a", "i_b", "expected"),
    [(0, 1, (0,)), (0, 2, (0, 1)), (0, 3, (1,)), (100, 200, (149, 150)), (67, 134, (100,))],
)
def test_midpoint_nodes(i_a, i_b, expected):
    assert midpoint_nodes(i_a, i_b) == expected


def test_increment_of_identical_controls_is_zero(oracle, rng):
    problem = oracle.problem()
    grid = TimeGrid(1.0, 10, 10)
    ubar = random_control(rng, grid, 1)
    assert exact_increment(problem, grid, ubar, ubar) == 0.0
    assert exact_increment(problem, grid, ubar, ubar.refine([0.05, 0.55])) == 0.0


@pytest.mark.parametrize("seed", [1, 2])
def test_increment_matches_cost_difference(seed):
    rng = np.random.default_rng(seed)
    oracle = LinearOracle.random(rng)
    problem = oracle.problem()
    grid = oracle_grid()
    ubar = random_control(rng, grid, 1)
    u = random_control(rng, grid, 1)
    direct = evaluate_cost(problem, grid, u) - evaluate_cost(problem, grid, ubar)
    formula = exact_increment(problem, grid, ubar, u)
    assert abs(formula - direct) <= 1e-4 * max(1.0, abs(direct))


def test_increment_of_single_changed_interval(oracle):
    problem = oracle.problem()
    grid = oracle_grid()
    ubar = grid.zero_control(1)
    values = np.zeros((grid.n_intervals, 1))
    values[17] = 2.0
    u = grid.control_from_values(values)
    direct = evaluate_cost(problem, grid, u) - evaluate_cost(problem, grid, ubar)
    assert exact_increment(problem, grid, ubar, u) == pytest.approx(direct, rel=1e-4)


def test_backward_invariance_is_exact(oracle, small_cfg, rng):
    grid = TimeGrid(1.0, 10, 20)
    assert backward_invariance_residual(oracle.problem(), grid, random_control(rng, grid, 1), stride=7) == 0.0
    problem = build_problem(small_cfg)
    rd_grid = time_grid(small_cfg)
    ubar = random_control(rng, rd_grid, 2, scale=5.0)
    assert backward_invariance_residual(problem, rd_grid, ubar, stride=rd_grid.steps_per_interval) == 0.0
    with pytest.raises(ValueError):
        backward_invariance_residual(problem, rd_grid, ubar, stride=0)


def test_probe_threads_do_not_change_results(small_cfg, monkeypatch):
    problem = build_problem(small_cfg)
    grid = time_grid(small_cfg)
    ubar = ControlSignal.constant(grid.control_partition, [1.0, -3.0])
    t = float(grid.control_partition[2])
    monkeypatch.delenv(THREADS_ENV, raising=False)
    serial = probe_xi(BackwardProbe(problem, grid, ubar), t, problem.x0)
    monkeypatch.setenv(THREADS_ENV, "4")
    threaded = probe_xi(BackwardProbe(problem, grid, ubar), t, problem.x0)
    explicit = probe_xi(BackwardProbe(problem, grid, ubar, scheme="forward", workers=3), t, problem.x0)
    np.testing.assert_array_equal(serial, threaded)
    np.testing.assert_array_equal(serial, explicit)


@pytest.mark.parametrize("raw", ["many", "-2"])
def test_bad_thread_setting(monkeypatch, raw):
    monkeypatch.setenv(THREADS_ENV, raw)
    with pytest.raises(ConfigError):
        probe_workers()


def test_ordered_map_keeps_order():
    assert ordered_map(lambda v: v * v, range(10), workers=4) == [v * v for v in range(10)]
    assert ordered_map(str, [], workers=4) == []
