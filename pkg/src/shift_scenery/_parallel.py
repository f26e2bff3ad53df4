"""Index-ordered parallel map; thread count never changes results."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def map_indexed(fn, count: int, threads: int = 1) -> list:
    """Apply ``fn`` to 0..count-1, results in index order."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, range(count)))
