"""Small shared helpers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """Worker cap from CGPRUNE_THREADS; defaults to all cores."""
    raw = os.environ.get("CGPRUNE_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map with a capped thread pool; results keep input order."""
    if len(items) <= 1 or thread_count() == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(thread_count(), len(items))) as pool:
        return list(pool.map(fn, items))
