"""Worker-pool plumbing. CURV4_THREADS caps the pool; results keep input order."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    raw = os.environ.get("CURV4_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        n = min(4, os.cpu_count() or 1)
    return n


def parallel_map(fn, items):
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
