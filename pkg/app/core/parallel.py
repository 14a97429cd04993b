# app/core/parallel.py
"""Ordered chunked execution.

Chunk boundaries depend only on the problem size and DYADIC_CHUNK_CELLS, and
results come back in chunk order, so any reduction over them is identical for
every DYADIC_THREADS value.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from app.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")


def chunk_ranges(total: int, width: int, max_cells: int | None = None) -> list[tuple[int, int]]:
    """Split [0, total) into contiguous row ranges of at most max_cells // width rows.

    Args:
        total: number of rows to cover
        width: cells per row
        max_cells: cell budget per chunk, defaults to settings.DYADIC_CHUNK_CELLS

    Returns:
        List of (start, stop) pairs in ascending order
    """
    budget = max_cells if max_cells is not None else settings.DYADIC_CHUNK_CELLS
    rows = max(1, budget // max(1, width))
    return [(start, min(start + rows, total)) for start in range(0, total, rows)]


def map_ordered(fn: Callable[[tuple[int, int]], T], ranges: Iterable[tuple[int, int]], threads: int | None = None) -> list[T]:
    """Apply fn to each range on a thread pool and return results in input order."""
    ranges = list(ranges)
    workers = min(threads or settings.DYADIC_THREADS, len(ranges)) or 1
    if workers == 1:
        return [fn(r) for r in ranges]
    logger.debug(f"Dispatching {len(ranges)} chunks on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, ranges))
