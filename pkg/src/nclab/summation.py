"""Deterministic reductions and a worker pool honouring NCL_THREADS.

Partial sums are formed per fixed-size block with ``math.fsum`` (correctly
rounded, hence independent of the order inside the block) and the block
results are combined in block order.  The outcome does not depend on how
many workers computed the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

BLOCK = 4096


def worker_count() -> int:
    raw = os.environ.get("NCL_THREADS", "").strip()
    cpus = os.cpu_count() or 1
    if not raw:
        return cpus
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"NCL_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"NCL_THREADS must be a positive integer, got {raw!r}")
    return min(n, cpus) if cpus else n


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int | None = None) -> list[R]:
    """``[fn(x) for x in items]`` possibly on a thread pool; output order follows ``items``."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def block_sum(values: np.ndarray | Iterable[float], block: int = BLOCK) -> float:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        return 0.0
    parts = [math.fsum(v[k:k + block]) for k in range(0, v.size, block)]
    return math.fsum(parts)
