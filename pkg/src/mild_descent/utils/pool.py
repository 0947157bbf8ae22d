"""Thread pool for independent probe flows."""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from ..core.errors import ConfigError

THREADS_ENV = "MILD_DESCENT_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def probe_workers() -> int:
    """
    Read the probe parallelism cap from the environment.

    Returns:
        Number of worker threads; 0 (the default) means run serially.
    """
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 0
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if workers < 0:
        raise ConfigError(f"{THREADS_ENV} must be >= 0")
    return workers


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 0) -> list[R]:
    """
    Apply ``fn`` to every item, results in input order.

    Args:
        fn: Pure function of one item
        items: Inputs
        workers: Thread count; 0 or 1 runs in the calling thread

    Returns:
        List of results, same order as ``items`` regardless of completion order
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
