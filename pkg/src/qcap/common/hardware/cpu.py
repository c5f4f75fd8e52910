from multiprocessing import Pool
from typing import Callable, Iterable, List, TypeVar

import psutil

from qcap.common.logger import logger

NUM_CORES_PHYSICAL = psutil.cpu_count(logical=False) or 1

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """Map ``func`` over ``items`` keeping input order.

    With more than one thread the work goes to a process pool, so ``func``
    must be a picklable module-level callable. Requests above the number of
    physical cores are clamped.

    Args:
        func: function applied to every item.
        items: inputs, consumed once.
        threads (int, optional): worker processes. Defaults to 1.

    Returns:
        List: results in input order.
    """
    items = list(items)
    workers = min(max(1, threads), NUM_CORES_PHYSICAL, max(1, len(items)))
    if workers == 1:
        return [func(item) for item in items]
    logger.debug(f"dispatch {len(items)} tasks to {workers} workers")
    with Pool(workers) as pool:
        return pool.map(func, items)
