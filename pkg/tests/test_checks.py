"""Tests for the verify suite."""

import numpy as np
import pytest
from scipy.linalg import expm

from mild_descent.core.checks import (
    check_increment_identity,
    check_monotonicity,
    convergence_slope,
    run_checks,
)
from mild_descent.core.config import RDConfig
from mild_descent.core.variational import LinearOracle


def test_stable_oracle_family(rng):
    for _ in range(10):
        oracle = LinearOracle.stable(rng)
        assert np.max(np.linalg.eigvals(oracle.A).real) == pytest.approx(-0.05, abs=1e-12)
        np.testing.assert_allclose(np.linalg.norm(oracle.B, axis=0), 1.0)
        offset = oracle.target - expm(oracle.A) @ oracle.x0
        assert np.linalg.norm(offset) == pytest.approx(2.0)
        assert oracle.alpha == 0.5


def test_no_rejections_over_twenty_oracles():
    result = check_monotonicity(np.random.default_rng(0), 20)
    assert result.value == 0.0
    assert result.passed
    assert result.detail == "20 runs"


@pytest.mark.slow
def test_no_rejections_on_benchmark_variants():
    result = check_monotonicity(np.random.default_rng(0), 0, RDConfig())
    assert result.value == 0.0
    assert result.detail == "2 runs"


def test_stepper_is_first_order(small_cfg):
    slope = convergence_slope(small_cfg)
    assert abs(slope - 1.0) <= 0.15


def test_increment_identity_on_oracles():
    result = check_increment_identity(np.random.default_rng(3), 5)
    assert result.passed
    assert result.value <= 1e-4


@pytest.mark.slow
def test_increment_identity_on_hundred_oracles():
    result = check_increment_identity(np.random.default_rng(RDConfig().seed), 100)
    assert result.passed
    assert result.detail == "100 draws"


def test_suite_passes_on_small_config(small_cfg):
    results = run_checks(small_cfg, draws=2)
    failed = [r.name for r in results if not r.passed]
    assert failed == []
    assert [r.name for r in results][-1] == "integrator order error"
