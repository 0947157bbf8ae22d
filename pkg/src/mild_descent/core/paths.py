"""Path constants for mild-descent."""

from pathlib import Path

DEFAULT_OUTPUT_DIR = Path("mild-descent-out")
MANIFEST_NAME = "manifest.json"


def init_output_dir(path: Path) -> Path:
    """Create the artifact directory (and parents) if missing."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path
