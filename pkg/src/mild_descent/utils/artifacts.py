"""CSV artifacts and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import tempfile
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Union

import numpy as np

from ..core.errors import ArtifactError
from ..core.paths import MANIFEST_NAME, init_output_dir
from ..core.problem import ControlSignal
from ..core.torus import STEPPER_VARIANT

logger = logging.getLogger(__name__)

ManifestValue = Union[str, int, float]

# Written by emit_artifacts; anything matching is cleared before a run.
ARTIFACT_PATTERNS = (
    "cost_history.csv",
    "control_iter*.csv",
    "terminal_profile_iter*.csv",
    "target_profile.csv",
    MANIFEST_NAME,
)


def fmt(value: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(value), ".17g")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, (int, str)) else fmt(v) for v in row])
    return path


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_cost_history(path: Path, costs: Sequence[float]) -> Path:
    return write_csv(path, ("iteration", "cost"), ((i, c) for i, c in enumerate(costs)))


def write_control(path: Path, u: ControlSignal) -> Path:
    header = ["t_start", "t_end"] + [f"u{j + 1}" for j in range(u.n_controls)]
    rows = (
        [u.partition[k], u.partition[k + 1], *u.values[k]]
        for k in range(u.n_intervals)
    )
    return write_csv(path, header, rows)


def write_profile(path: Path, theta: np.ndarray, rho: np.ndarray) -> Path:
    return write_csv(path, ("theta", "rho"), zip(theta, rho))


def read_control(path: Path) -> ControlSignal:
    """
    Read a control file written by :func:`write_control`.

    Raises:
        ArtifactError: missing file, bad header or non-numeric rows
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as exc:
        raise ArtifactError(f"cannot read control file {path}: {exc.strerror or exc}") from None
    if not rows or rows[0][:2] != ["t_start", "t_end"] or len(rows[0]) < 3:
        raise ArtifactError(f"{path}: expected header t_start,t_end,u1,...")
    width = len(rows[0])
    if len(rows) < 2:
        raise ArtifactError(f"{path}: no intervals")
    try:
        table = np.array([[float(v) for v in row] for row in rows[1:]], dtype=np.float64)
    except ValueError as exc:
        raise ArtifactError(f"{path}: {exc}") from None
    if table.shape[1] != width:
        raise ArtifactError(f"{path}: rows must have {width} columns")
    if not np.array_equal(table[1:, 0], table[:-1, 1]):
        raise ArtifactError(f"{path}: intervals are not contiguous")
    partition = np.append(table[:, 0], table[-1, 1])
    try:
        return ControlSignal(partition, table[:, 2:])
    except ValueError as exc:
        raise ArtifactError(f"{path}: {exc}") from None


@dataclass
class RunManifest:
    """Flat record of one run: config echo, scheme, timestamps, files."""

    command: str
    version: str
    config: dict[str, Any]
    started: str = field(default_factory=utc_now)
    finished: str = ""
    scheme: dict[str, str] = field(
        default_factory=lambda: {
            "integrator": STEPPER_VARIANT,
            "quadrature": "composite midpoint over merged partition pieces",
            "probe": "forward difference",
        }
    )
    summary: dict[str, ManifestValue] = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)

    def to_flat(self) -> dict[str, ManifestValue]:
        out: dict[str, ManifestValue] = {
            "command": self.command,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
        }
        out.update({f"config.{k}": v for k, v in self.config.items()})
        out.update({f"scheme.{k}": v for k, v in self.scheme.items()})
        out.update({f"summary.{k}": v for k, v in self.summary.items()})
        out.update({f"file.{name}": digest for name, digest in sorted(self.files.items())})
        out[f"file.{MANIFEST_NAME}"] = "self"
        return out


def write_manifest(directory: Path, manifest: RunManifest) -> Path:
    """Write ``manifest.json`` atomically."""
    path = directory / MANIFEST_NAME
    text = json.dumps(manifest.to_flat(), indent=2) + "\n"
    with tempfile.NamedTemporaryFile(
        mode="w",
        dir=directory,
        delete=False,
        encoding="utf-8",
    ) as temp_file:
        temp_file.write(text)
        temp_path = Path(temp_file.name)
    os.replace(temp_path, path)
    return path


def clear_artifacts(directory: Path) -> None:
    for pattern in ARTIFACT_PATTERNS:
        for stale in directory.glob(pattern):
            stale.unlink()


def emit_artifacts(
    directory: Path,
    manifest: RunManifest,
    costs: Sequence[float],
    controls: Sequence[ControlSignal],
    terminal_states: Sequence[np.ndarray],
    theta: np.ndarray,
    target: np.ndarray,
) -> list[Path]:
    """
    Write every artifact of a run and the manifest that lists them.

    Stale artifacts from an earlier run are removed first. Other files are
    left alone and reported with a warning, since the manifest would not
    cover them; give each run a directory of its own.

    Args:
        directory: Output directory, created if missing
        manifest: Filled in with file digests and the finish time
        costs: Cost history, entry 0 for the initial control
        controls: Control per recorded iteration
        terminal_states: Terminal profile per recorded iteration
        theta: Spatial nodes
        target: Target profile

    Returns:
        Paths written, manifest last

    Raises:
        ArtifactError: the directory cannot be written
    """
    try:
        directory = init_output_dir(directory)
        clear_artifacts(directory)
        written = [write_cost_history(directory / "cost_history.csv", costs)]
        for k, (u, x) in enumerate(zip(controls, terminal_states)):
            written.append(write_control(directory / f"control_iter{k}.csv", u))
            written.append(write_profile(directory / f"terminal_profile_iter{k}.csv", theta, x))
        written.append(write_profile(directory / "target_profile.csv", theta, target))
        manifest.files = {p.name: sha256_file(p) for p in written}
        manifest.finished = utc_now()
        written.append(write_manifest(directory, manifest))
        listed = set(manifest.files) | {MANIFEST_NAME}
        unlisted = sorted(p.name for p in directory.iterdir() if p.name not in listed)
    except OSError as exc:
        raise ArtifactError(f"cannot write artifacts to {directory}: {exc.strerror or exc}") from None
    if unlisted:
        logger.warning("%s also holds files not listed in the manifest: %s", directory, ", ".join(unlisted))
    return written
