"""Ordered fan-out of independent simulation cells"""

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from dotenv import load_dotenv

load_dotenv()

# Worker processes for sweep cells, oracle cells and optimizer restarts
WORKERS = int(os.getenv("MORPHOSIM_WORKERS", "1"))

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: Optional[int] = None) -> List[R]:
    """
    Apply ``fn`` to every item, results in input order.

    Args:
        fn: Module-level callable (must pickle when workers > 1)
        items: Independent work items
        workers: Process count; None uses MORPHOSIM_WORKERS, 1 runs in-process

    Returns:
        List of results aligned with ``items``
    """
    work = list(items)
    count = WORKERS if workers is None else workers
    if count <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    with ProcessPoolExecutor(max_workers=min(count, len(work))) as pool:
        return list(pool.map(fn, work))
