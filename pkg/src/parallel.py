"""Thread pool helpers for data-parallel evaluations."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar


logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "EIGHTPORT_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """Number of worker threads, overridable through EIGHTPORT_THREADS."""
    value = os.environ.get(THREADS_ENV_VAR)
    if value:
        try:
            count = int(value)
            if count >= 1:
                return count
        except ValueError:
            pass
        logger.warning(f"Ignoring invalid {THREADS_ENV_VAR}={value!r}")
    return min(8, os.cpu_count() or 1)


def parallel_map(function: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """
    Apply a pure function to every item on a thread pool.

    Results come back in input order regardless of completion order.
    """
    items = list(items)
    workers = min(worker_count(), max(1, len(items)))
    if workers == 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))
