"""Thread-pool helper honoring the PLANETFORGE_THREADS cap.

Every parallel path in the package routes through :func:`parallel_map`, which
preserves input order. Work items must be pure functions of their arguments so
results are identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_ENV_VAR = "PLANETFORGE_THREADS"


def thread_count() -> int:
    """Worker count: PLANETFORGE_THREADS if set, else min(4, cpu_count)."""
    raw = os.environ.get(_ENV_VAR)
    if raw is not None:
        try:
            n = int(raw)
        except ValueError:
            n = 1
        return max(1, n)
    return max(1, min(4, os.cpu_count() or 1))


def parallel_map(fn: Callable[[T], R], items: Sequence[T] | Iterable[T]) -> list[R]:
    """Map fn over items, in order, using up to thread_count() workers."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
