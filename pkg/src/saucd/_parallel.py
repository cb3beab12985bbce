"""Thread-pool mapping with a worker cap from the SAUCD_THREADS
environment variable. The heavy kernels (LAPACK eigensolves) release the
GIL, so threads give real speedups without forking."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["worker_count", "thread_map"]


def worker_count() -> int:
    env = os.environ.get("SAUCD_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"SAUCD_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return max(1, min(8, os.cpu_count() or 1))


def thread_map(fn, items):
    """Apply fn over items, preserving order; serial when one worker."""
    items = list(items)
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
