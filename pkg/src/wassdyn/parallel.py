"""Worker pool with order-preserving results.

Every parallel step in wassdyn is a pure function of its item, so results are merged by
input index and never depend on scheduling.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

import psutil

from wassdyn.config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Physical core count, capped by ``WASSDYN_THREADS``."""
    cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    cap = get_settings().THREADS
    if cap is not None:
        return max(1, min(cores, cap))
    return max(1, cores)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], *, workers: int | None = None) -> list[R]:
    """Apply ``fn`` to every item, returning results in input order."""
    seq = list(items)
    n = workers if workers is not None else worker_count()
    if n <= 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    with ThreadPoolExecutor(max_workers=min(n, len(seq)), thread_name_prefix="wassdyn") as pool:
        return list(pool.map(fn, seq))
