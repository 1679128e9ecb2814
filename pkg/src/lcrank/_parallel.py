"""Optional thread-pool mapping for per-point subproblems.

Parallelism is capped by the LCRANK_THREADS environment variable
(0 or unset = sequential). Every parallel site maps a pure function over
disjoint per-point inputs, so results are identical to the sequential path.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "LCRANK_THREADS"


def resolve_threads(n_threads: int | None = None) -> int:
    """Effective worker count: explicit argument wins, then the env var."""
    if n_threads is None:
        raw = os.environ.get(ENV_VAR, "0")
        try:
            n_threads = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    if n_threads < 0:
        raise ValueError("thread count must be >= 0")
    return n_threads


def pmap(fn: Callable[[T], R], items: Sequence[T], n_threads: int) -> list[R]:
    """Ordered map, threaded when n_threads > 1."""
    if n_threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        return list(pool.map(fn, items))
