"""Deterministic, compensated summation of quadrature sums.

Node sets are cut into chunks of a fixed size that does not depend on the
worker count. Each chunk is reduced with a pairwise TwoSum scheme and the
per-chunk partials are combined in chunk order, so the result is bit-for-bit
identical whether one thread or many evaluate the chunks.
"""

from __future__ import annotations

import contextlib
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

CHUNK_SIZE = 4096

_threads = 1


def set_threads(n: int) -> None:
    """Set the worker count; ``0`` means one per CPU."""
    global _threads
    if n < 0:
        raise ValueError("thread count must be >= 0")
    _threads = n if n > 0 else (os.cpu_count() or 1)


def get_threads() -> int:
    return _threads


@contextlib.contextmanager
def threads(n: int):
    old = _threads
    set_threads(n)
    try:
        yield
    finally:
        set_threads(old)


def _two_sum(a, b):
    s = a + b
    bp = s - a
    e = (a - (s - bp)) + (b - bp)
    return s, e


def compensated_sum(values, axis: int = 0):
    """Sum along ``axis`` with TwoSum error tracking in a fixed pairwise tree.

    Works for real and complex input (complex addition is componentwise).
    """
    x = np.moveaxis(np.asarray(values), axis, 0)
    if x.shape[0] == 0:
        return np.zeros(x.shape[1:], dtype=x.dtype)
    err = np.zeros(x.shape[1:], dtype=x.dtype)
    while x.shape[0] > 1:
        if x.shape[0] % 2:
            x = np.concatenate([x, np.zeros((1,) + x.shape[1:], dtype=x.dtype)])
        s, e = _two_sum(x[0::2], x[1::2])
        err = err + e.sum(axis=0)
        x = s
    return x[0] + err


def map_chunks(fn: Callable, n: int, chunk_size: int = CHUNK_SIZE) -> list:
    """Apply ``fn(start, stop)`` to consecutive chunks of ``range(n)``.

    Results come back in chunk order regardless of the thread count.
    """
    bounds = [(i, min(i + chunk_size, n)) for i in range(0, n, chunk_size)]
    if _threads <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=_threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


def weighted_sum(evaluate: Callable, points: np.ndarray, weights: np.ndarray,
                 chunk_size: int = CHUNK_SIZE):
    """``sum_k weights[k] * evaluate(points)[k]`` with the reduction contract.

    ``evaluate`` receives a chunk of points and returns an array whose first
    axis runs over those points (scalars or matrices per point).
    """
    points = np.asarray(points)
    weights = np.asarray(weights)

    def partial(a, b):
        vals = np.asarray(evaluate(points[a:b]))
        w = weights[a:b].reshape((b - a,) + (1,) * (vals.ndim - 1))
        return compensated_sum(w * vals)

    parts = map_chunks(partial, len(points), chunk_size)
    if not parts:
        return 0.0
    return compensated_sum(np.stack(parts))
