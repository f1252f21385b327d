import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from statespace.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_sweep(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Evaluate ``fn`` on every item, results in input order.

    ``threads`` (default STATESPACE_THREADS) bounds the worker pool; 0 or 1
    evaluates sequentially in the calling thread.
    """
    items = list(items)
    threads = settings.STATESPACE_THREADS if threads is None else threads
    log_context = {"event": "SWEEP", "items": len(items), "threads": threads}
    logger.debug("Starting sweep", extra={"extra_info": log_context})
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="statespace-sweep") as pool:
        return list(pool.map(fn, items))
