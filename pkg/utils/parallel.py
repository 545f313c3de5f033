"""Ordered fan-out of independent trials"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_parallel(fn: Callable[[T], R], tasks: Iterable[T], threads: int = 1) -> List[R]:
    """
    Apply fn to every task and return results in task order.

    fn must be a module-level function when threads > 1 (it is pickled into
    worker processes). Order of the returned list never depends on scheduling.
    """
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]

    workers = min(threads, len(tasks))
    chunksize = max(1, len(tasks) // (workers * 4))
    logger.debug(f"Running {len(tasks)} tasks on {workers} workers (chunksize={chunksize})")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunksize))
