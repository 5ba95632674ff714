"""Block-parallel scan helpers.

Work is split into fixed row blocks; results come back in block order so
reductions are independent of the worker count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")

_workers = 1


def set_workers(n: int | None) -> None:
    global _workers
    if n is None:
        n = os.cpu_count() or 1
    if n < 1:
        raise ValueError("worker count must be >= 1")
    _workers = int(n)


def get_workers() -> int:
    return _workers


def row_blocks(n: int, size: int) -> list[tuple[int, int]]:
    size = max(1, int(size))
    return [(lo, min(n, lo + size)) for lo in range(0, n, size)]


def block_size(n_rows: int, cols: int, budget: int = 4_000_000) -> int:
    """Rows per block so that one block holds about ``budget`` cells."""
    return max(1, budget // max(1, cols))


def map_blocks(fn: Callable[..., T], blocks: Iterable, workers: int | None = None) -> list[T]:
    blocks = list(blocks)
    w = workers or _workers
    if w <= 1 or len(blocks) <= 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, blocks))
