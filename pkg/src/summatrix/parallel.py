"""Optional thread parallelism for batch computations.

Work is split into contiguous chunks and reassembled in index order, so the
result never depends on the worker count.
"""

from __future__ import annotations

import contextlib
import contextvars
from concurrent.futures import ThreadPoolExecutor

_workers = contextvars.ContextVar("summatrix_workers", default=1)


def workers() -> int:
    return _workers.get()


@contextlib.contextmanager
def use_workers(n: int):
    if n < 1:
        raise ValueError("worker count must be positive")
    token = _workers.set(int(n))
    try:
        yield
    finally:
        _workers.reset(token)


def map_chunks(fn, n_items: int, min_chunk: int = 8) -> list:
    """Apply ``fn(start, stop)`` over [0, n_items) and concatenate the lists."""
    w = workers()
    if w <= 1 or n_items < 2 * min_chunk:
        return list(fn(0, n_items))
    size = max(min_chunk, -(-n_items // w))
    bounds = [(a, min(a + size, n_items)) for a in range(0, n_items, size)]
    with ThreadPoolExecutor(max_workers=w) as pool:
        parts = list(pool.map(lambda ab: list(fn(*ab)), bounds))
    return [x for part in parts for x in part]
