"""Tests for config parsing and validation."""

import logging
import re

import pytest

from mild_descent.core.config import (
    CONFIG_KEYS,
    RDConfig,
    create_example_config,
    load_config,
    parse_config,
    write_example_config,
)
from mild_descent.core.errors import ConfigError


def test_empty_file_gives_defaults(caplog):
    with caplog.at_level(logging.INFO, logger="mild_descent.core.config"):
        cfg = parse_config("", source="run.toml")
    assert cfg == RDConfig()
    assert "run.toml: using defaults for nu" in caplog.text


def test_horizon_key():
    cfg = parse_config("T = 3.0\ndt = 0.01\n")
    assert cfg.horizon == 3.0
    assert cfg.to_dict()["T"] == 3.0
    assert list(cfg.to_dict()) == list(CONFIG_KEYS)


def test_integer_literals_become_floats():
    cfg = parse_config("alpha = 1\n")
    assert cfg.alpha == 1.0
    assert isinstance(cfg.alpha, float)


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ("nu = -1.0\n", "nu must be > 0"),
        ("alpha = -0.1\n", "alpha must be >= 0"),
        ("epsilon = 2.0\n", "epsilon must be <= 1"),
        ("n_space = 95\n", "n_space must be an even integer >= 4"),
        ("n_space = 64.0\n", "n_space must be an integer"),
        ("seed = true\n", "seed must be a number, got a boolean"),
        ("outer_iters = -1\n", "outer_iters must be >= 0"),
        ("seed = -1\n", "seed must be >= 0"),
        ("dt = 0.5\n", "dt must be <= T / n_intervals"),
        ("output_dir = 3\n", "output_dir must be a string"),
        ("mu = 1.0\nzeta = 2\n", "unknown config key(s): mu, zeta"),
    ],
)
def test_invalid_values(text, message):
    with pytest.raises(ConfigError, match=re.escape(message)):
        parse_config(text)


def test_parse_error_has_position():
    with pytest.raises(ConfigError) as info:
        parse_config("nu = 0.1\nbeta =\n", source="bad.toml")
    assert str(info.value).startswith("bad.toml: ")
    assert "line 2" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_config(tmp_path / "absent.toml")


def test_load_none_is_default():
    assert load_config(None) == RDConfig()


def test_replace_revalidates():
    cfg = RDConfig()
    assert cfg.replace(outer_iters=7).outer_iters == 7
    with pytest.raises(ConfigError):
        cfg.replace(dt=1.0)


def test_example_config_round_trip(tmp_path):
    text = create_example_config()
    assert parse_config(text) == RDConfig()
    active = "\n".join(
        line[2:] for line in text.splitlines() if line.startswith("# ") and " = " in line
    )
    assert parse_config(active) == RDConfig()
    path = write_example_config(tmp_path / "nested" / "run.toml")
    assert load_config(path) == RDConfig()
