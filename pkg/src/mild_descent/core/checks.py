"""Numerical self-checks run by ``mild-descent verify``.

Each check returns a :class:`CheckResult` comparing a measured residual
with its threshold. Linear-oracle checks draw random problems from the
seeded generator; benchmark checks use the run configuration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .benchmark import build_problem, time_grid, torus_grid
from .config import RDConfig
from .descent import DescentConfig, pointwise_minimizer, run_descent
from .flow import evaluate_cost, terminal_state
from .increment import backward_invariance_residual, exact_increment, hamiltonian_value
from .problem import ControlSignal, TimeGrid
from .torus import l2_distance_sq
from .variational import LinearOracle, dp_probe_vs_jvp, jvp

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _at_most(name: str, value: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(name, value, threshold, bool(value <= threshold), detail)


def random_control(rng: np.random.Generator, grid: TimeGrid, n_controls: int, scale: float = 1.0) -> ControlSignal:
    return grid.control_from_values(scale * rng.uniform(-1.0, 1.0, (grid.n_intervals, n_controls)))


def oracle_grid(horizon: float = 1.0, n_intervals: int = 50, dt: float = 2e-4) -> TimeGrid:
    return TimeGrid.from_step(horizon, n_intervals, dt)


def convergence_slope(cfg: RDConfig, refine: int = 16, value: tuple[float, float] = (2.0, -1.0)) -> float:
    """
    Observed order of the stepper on the benchmark.

    Terminal states at the configured dt and at dt/2 are compared with a
    run at dt/refine under the same constant control.

    Returns:
        log2(e(dt) / e(dt/2))
    """
    problem = build_problem(cfg)
    space = torus_grid(cfg)
    base = time_grid(cfg).steps_per_interval

    def run(spi: int) -> np.ndarray:
        grid = TimeGrid(cfg.horizon, cfg.n_intervals, spi)
        u = ControlSignal.constant(grid.control_partition, value)
        return terminal_state(problem, grid, u)

    reference = run(base * refine)
    coarse = math.sqrt(l2_distance_sq(space, run(base), reference))
    fine = math.sqrt(l2_distance_sq(space, run(2 * base), reference))
    logger.debug("self-convergence errors %.3e, %.3e", coarse, fine)
    return math.log2(coarse / fine)


def check_increment_identity(rng: np.random.Generator, draws: int, grid: TimeGrid | None = None) -> CheckResult:
    """exact_increment against the direct cost difference on linear oracles."""
    grid = grid or oracle_grid()
    worst = 0.0
    for _ in range(draws):
        oracle = LinearOracle.random(rng)
        problem = oracle.problem()
        ubar = random_control(rng, grid, problem.n_controls)
        u = random_control(rng, grid, problem.n_controls)
        direct = evaluate_cost(problem, grid, u) - evaluate_cost(problem, grid, ubar)
        formula = exact_increment(problem, grid, ubar, u)
        worst = max(worst, abs(formula - direct) / max(1.0, abs(direct)))
    return _at_most("increment identity (oracle)", worst, 1e-4, f"{draws} draws")


def check_backward_invariance(rng: np.random.Generator, cfg: RDConfig) -> list[CheckResult]:
    oracle = LinearOracle.random(rng)
    problem = oracle.problem()
    grid = oracle_grid(n_intervals=20, dt=1e-3)
    ubar = random_control(rng, grid, problem.n_controls)
    oracle_residual = backward_invariance_residual(problem, grid, ubar, stride=10)

    rd = build_problem(cfg)
    rd_grid = time_grid(cfg)
    rd_ubar = random_control(rng, rd_grid, rd.n_controls, scale=cfg.radius / 4)
    rd_residual = backward_invariance_residual(rd, rd_grid, rd_ubar, stride=rd_grid.steps_per_interval)
    return [
        _at_most("backward invariance (oracle)", oracle_residual, 1e-8),
        _at_most("backward invariance (benchmark)", rd_residual, 1e-4),
    ]


def check_jvp(rng: np.random.Generator, cfg: RDConfig) -> list[CheckResult]:
    """Tangent flow against closed forms and against probe differences."""
    oracle = LinearOracle.random(rng)
    problem = oracle.problem()
    grid = oracle_grid(n_intervals=20, dt=1e-4)
    ubar = random_control(rng, grid, problem.n_controls)
    s = float(grid.control_partition[5])
    x = rng.standard_normal(oracle.dim)
    h = rng.standard_normal(oracle.dim)
    exact = oracle.propagator(oracle.horizon - s) @ h
    tangent = jvp(problem, grid, ubar, s, x, h)
    jvp_error = float(np.linalg.norm(tangent - exact) / np.linalg.norm(exact))
    probe, derivative = dp_probe_vs_jvp(problem, grid, ubar, s, x, h)

    rd = build_problem(cfg)
    rd_grid = time_grid(cfg)
    rd_ubar = rd_grid.zero_control(rd.n_controls)
    epsilons = (1e-2, 1e-3, 1e-4)
    gaps = []
    for eps in epsilons:
        fd, an = dp_probe_vs_jvp(rd, rd_grid, rd_ubar, 0.0, rd.x0, rd.profiles[0], epsilon=eps)
        gaps.append(abs(fd - an))
    slope = math.log10(gaps[0] / gaps[-1]) / math.log10(epsilons[0] / epsilons[-1])
    return [
        _at_most("jvp vs matrix exponential (oracle)", jvp_error, 1e-8),
        _at_most("probe vs jvp gap (oracle)", abs(probe - derivative), 1e-8),
        _at_most(
            "probe vs jvp slope error (benchmark)",
            abs(slope - 1.0),
            0.2,
            "gaps " + ", ".join(f"{g:.2e}" for g in gaps),
        ),
    ]


def check_minimizer(rng: np.random.Generator, instances: int = 100, samples: int = 10_000) -> CheckResult:
    """Count random ball points that beat the pointwise minimizer."""
    violations = 0
    for _ in range(instances):
        alpha = float(rng.choice([0.0, 0.2, 1.0]))
        radius = float(rng.choice([1.0, 20.0]))
        grad = rng.standard_normal(2) * 10.0 ** rng.uniform(-2, 2)
        best = hamiltonian_value(alpha, grad, pointwise_minimizer(alpha, radius, grad))
        directions = rng.standard_normal((samples, 2))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        points = directions * (radius * np.sqrt(rng.uniform(size=samples)))[:, None]
        values = 0.5 * alpha * np.sum(points**2, axis=1) + points @ grad
        violations += int(np.sum(values < best - 1e-12 * (1.0 + abs(best))))
    return _at_most("minimizer violations", float(violations), 0.0, f"{instances} instances")


def check_monotonicity(rng: np.random.Generator, draws: int, cfg: RDConfig | None = None) -> CheckResult:
    """Rejections over stable oracle descents, plus the benchmark at beta 0 and cfg.beta."""
    grid = oracle_grid(horizon=1.0, n_intervals=30, dt=1e-3)
    descent = DescentConfig(n_intervals=30, epsilon=1e-3, max_iters=5)
    rejections = 0
    runs = 0
    for _ in range(draws):
        oracle = LinearOracle.stable(rng)
        problem = oracle.problem()
        report = run_descent(problem, grid, descent, grid.zero_control(problem.n_controls))
        rejections += len(report.rejections)
        runs += 1
    if cfg is not None:
        for beta in sorted({0.0, cfg.beta}):
            variant = cfg.replace(beta=beta, outer_iters=5)
            rd_grid = time_grid(variant)
            report = run_descent(
                build_problem(variant),
                rd_grid,
                DescentConfig(variant.n_intervals, variant.epsilon, 5),
                rd_grid.zero_control(2),
            )
            rejections += len(report.rejections)
            runs += 1
    return _at_most("monotonicity rejections", float(rejections), 0.0, f"{runs} runs")


def check_integrator_order(cfg: RDConfig) -> CheckResult:
    slope = convergence_slope(cfg)
    return _at_most("integrator order error", abs(slope - 1.0), 0.15, f"slope {slope:.3f}")


def run_checks(cfg: RDConfig, draws: int = 5, thorough: bool = False) -> list[CheckResult]:
    """
    Run the whole suite.

    Args:
        cfg: Benchmark configuration (its seed seeds the random draws)
        draws: Random problems per oracle check
        thorough: Include the benchmark descents in the monotonicity check

    Returns:
        Results in a fixed order
    """
    rng = np.random.default_rng(cfg.seed)
    results = [check_increment_identity(rng, draws)]
    results += check_backward_invariance(rng, cfg)
    results += check_jvp(rng, cfg)
    results.append(check_minimizer(rng))
    results.append(check_monotonicity(rng, draws, cfg if thorough else None))
    results.append(check_integrator_order(cfg))
    for r in results:
        logger.info("%s: %.3e (threshold %.3e) %s", r.name, r.value, r.threshold, "ok" if r.passed else "FAILED")
    return results
