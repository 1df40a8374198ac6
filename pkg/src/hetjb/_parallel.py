"""Process-pool helper with deterministic, order-preserving results."""

import os
from concurrent.futures import ProcessPoolExecutor

from threadpoolctl import threadpool_limits


def _init_worker():
    # one BLAS thread per worker keeps the global budget at ``jobs`` and makes
    # every reduction run in the same order as the serial path
    threadpool_limits(1)


def resolve_jobs(jobs):
    if jobs is None or jobs <= 0:
        return os.cpu_count() or 1
    return int(jobs)


def ordered_map(fn, items, jobs=1):
    items = list(items)
    jobs = min(resolve_jobs(jobs), max(len(items), 1))
    if jobs <= 1:
        with threadpool_limits(1):
            return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))
