"""Worker-pool helper honoring the FRACMIX_THREADS cap (0 = auto)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("FRACMIX_THREADS", "").strip()
    if raw in ("", "0", "auto"):
        return min(os.cpu_count() or 1, 4)
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn, items):
    """Map preserving order; results do not depend on scheduling."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
