"""Run configuration: the flat TOML file read by the CLI."""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib  # type: ignore[no-redef]

from .errors import ConfigError
from .paths import DEFAULT_OUTPUT_DIR

logger = logging.getLogger(__name__)

# File key -> RDConfig field, in file order.
CONFIG_KEYS = {
    "nu": "nu",
    "beta": "beta",
    "T": "horizon",
    "alpha": "alpha",
    "radius": "radius",
    "epsilon": "epsilon",
    "n_space": "n_space",
    "dt": "dt",
    "n_intervals": "n_intervals",
    "outer_iters": "outer_iters",
    "seed": "seed",
    "output_dir": "output_dir",
}

_INT_FIELDS = {"n_space", "n_intervals", "outer_iters", "seed"}


@dataclass(frozen=True)
class RDConfig:
    """Parameters of the reaction-diffusion benchmark.

    Defaults reproduce the reference run: nu=0.1, beta=0.05, T=2,
    alpha=0.2, R=20, eps=1e-3, 96 nodes, dt=1e-3, 30 intervals, 4
    iterations. ``seed`` drives the random draws of the verify suite.
    """

    nu: float = 0.1
    beta: float = 0.05
    horizon: float = 2.0
    alpha: float = 0.2
    radius: float = 20.0
    epsilon: float = 1e-3
    n_space: int = 96
    dt: float = 1e-3
    n_intervals: int = 30
    outer_iters: int = 4
    seed: int = 0
    output_dir: str = str(DEFAULT_OUTPUT_DIR)

    def __post_init__(self) -> None:
        positive = {
            "nu": self.nu,
            "T": self.horizon,
            "radius": self.radius,
            "epsilon": self.epsilon,
            "dt": self.dt,
        }
        for key, value in positive.items():
            if not value > 0:
                raise ConfigError(f"{key} must be > 0")
        if not self.alpha >= 0:
            raise ConfigError("alpha must be >= 0")
        if self.epsilon > 1:
            raise ConfigError("epsilon must be <= 1")
        if self.n_space < 4 or self.n_space % 2:
            raise ConfigError("n_space must be an even integer >= 4")
        if self.n_intervals < 1:
            raise ConfigError("n_intervals must be >= 1")
        if self.outer_iters < 0:
            raise ConfigError("outer_iters must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.dt > self.horizon / self.n_intervals:
            raise ConfigError("dt must be <= T / n_intervals")
        if not self.output_dir:
            raise ConfigError("output_dir must not be empty")

    def to_dict(self) -> dict[str, Any]:
        """Config echo keyed like the file."""
        values = asdict(self)
        return {key: values[name] for key, name in CONFIG_KEYS.items()}

    def replace(self, **changes: Any) -> RDConfig:
        values = asdict(self)
        values.update(changes)
        return RDConfig(**values)


def _coerce(key: str, value: Any) -> Any:
    name = CONFIG_KEYS[key]
    if name == "output_dir":
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be a string")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a number, got a boolean")
    if name in _INT_FIELDS:
        if not isinstance(value, int):
            raise ConfigError(f"{key} must be an integer, got {value!r}")
        return value
    if not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    return float(value)


def parse_config(text: str, source: str = "<config>") -> RDConfig:
    """Parse a flat TOML document into an :class:`RDConfig`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    unknown = sorted(k for k in data if k not in CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{source}: unknown config key(s): {', '.join(unknown)}")
    missing = [k for k in CONFIG_KEYS if k not in data]
    if missing:
        logger.info("%s: using defaults for %s", source, ", ".join(missing))
    values = {CONFIG_KEYS[k]: _coerce(k, v) for k, v in data.items()}
    return RDConfig(**values)


def load_config(path: Path | str | None = None) -> RDConfig:
    """
    Load a run configuration.

    Args:
        path: TOML file; None gives the defaults

    Returns:
        Validated configuration

    Raises:
        ConfigError: unreadable file, parse error (with line and column),
            unknown key or out-of-range value
    """
    if path is None:
        return RDConfig()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text, source=str(path))


def create_example_config() -> str:
    """Generate example config file content."""
    defaults = RDConfig()
    lines = [
        "# mild-descent run configuration",
        "# Every key is optional; missing keys take the values shown.",
        "",
    ]
    comments = {
        "nu": "diffusivity",
        "beta": "logistic reaction rate",
        "T": "horizon",
        "alpha": "control regularization weight",
        "radius": "control bound |u| <= radius",
        "epsilon": "probe step",
        "n_space": "spatial nodes (even)",
        "dt": "requested time step, refined to align with the intervals",
        "n_intervals": "sample-and-hold intervals",
        "outer_iters": "descent iterations",
        "seed": "random seed for the verify suite",
        "output_dir": "artifact directory",
    }
    for key, value in defaults.to_dict().items():
        rendered = f'"{value}"' if isinstance(value, str) else repr(value)
        lines.append(f"# {comments[key]}")
        lines.append(f"# {key} = {rendered}")
    return "\n".join(lines) + "\n"


def write_example_config(path: Path) -> Path:
    """Write :func:`create_example_config` to ``path`` atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        mode="w",
        dir=path.parent,
        delete=False,
        encoding="utf-8",
    ) as temp_file:
        temp_file.write(create_example_config())
        temp_path = Path(temp_file.name)
    os.replace(temp_path, path)
    return path
