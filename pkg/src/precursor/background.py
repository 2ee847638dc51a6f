import concurrent.futures
import logging
import multiprocessing
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")


class BackgroundQueue:
    """Thread pool whose ``map`` returns results in submission order.

    With ``n=1`` work runs inline, so single-worker runs need no threads.
    """

    def __init__(self, n: Optional[int] = None):
        if n is None:
            n = multiprocessing.cpu_count()
        if n < 1:
            raise ValueError("a queue needs at least one worker")
        self.n = n
        self.pool = concurrent.futures.ThreadPoolExecutor(max_workers=n) if n > 1 else None
        self.results: List[concurrent.futures.Future] = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.shutdown()

    def run(self, f: Callable[..., T], *args, **kwargs) -> "concurrent.futures.Future[T]":
        if self.pool is None:
            future: concurrent.futures.Future = concurrent.futures.Future()
            try:
                future.set_result(f(*args, **kwargs))
            except Exception as e:
                future.set_exception(e)
        else:
            future = self.pool.submit(f, *args, **kwargs)
        self.results.append(future)
        return future

    def map(self, f: Callable[..., T], items: Iterable) -> List[T]:
        """``[f(item) for item in items]``; the first failure is re-raised."""
        futures = [self.run(f, item) for item in items]
        return [future.result() for future in futures]

    def shutdown(self) -> None:
        if self.pool is not None:
            self.pool.shutdown(wait=True)


def replicate(fn: Callable[[int], T], seeds: Iterable[int], *, workers: Optional[int] = 1) -> List[T]:
    """Runs ``fn(seed)`` for every seed, results ordered like ``seeds``."""
    seeds = list(seeds)
    logger.debug("replicating over %d seed(s) with %s worker(s)", len(seeds), workers)
    with BackgroundQueue(workers) as queue:
        return queue.map(fn, seeds)
