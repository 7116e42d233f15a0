"""Deterministic parallel map over independent work units."""
from __future__ import annotations

import contextlib
import os
from concurrent.futures import ThreadPoolExecutor

from threadpoolctl import threadpool_limits

THREADS_ENV = "ENTSPEC_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``$ENTSPEC_THREADS``, else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        threads = int(raw) if raw else 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


@contextlib.contextmanager
def single_threaded_blas():
    # each work unit runs one LAPACK call on one thread, so results do not
    # depend on how many units run concurrently
    with threadpool_limits(limits=1, user_api="blas"):
        yield


def pmap(fn, items, threads: int = 1) -> list:
    """Ordered map; output order follows ``items`` whatever the schedule."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
