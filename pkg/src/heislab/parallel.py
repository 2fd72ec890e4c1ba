"""Deterministic thread-pool helpers.

Work items are independent and results are reduced in submission order, so
counted quantities are identical for any thread count.  The default pool
size comes from the HEIS_THREADS environment variable, falling back to the
machine's CPU count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["resolve_threads", "ordered_map"]


def resolve_threads(threads: int | None = None) -> int:
    """Thread count: explicit argument wins, then HEIS_THREADS, then CPUs."""
    if threads is not None:
        n = int(threads)
    else:
        env = os.environ.get("HEIS_THREADS", "").strip()
        n = int(env) if env else (os.cpu_count() or 1)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    return n


def ordered_map(fn, items, threads: int | None = None) -> list:
    """Map fn over items, preserving order; single-threaded when threads=1."""
    n = resolve_threads(threads)
    items = list(items)
    if n == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
