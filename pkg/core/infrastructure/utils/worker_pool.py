from concurrent.futures import ThreadPoolExecutor, Future
from threading import Lock
import logging
from typing import Any, Callable, Iterable, List, Optional, TypeVar, Generic

logger = logging.getLogger(__name__)

T = TypeVar('T')  # Type for task data
R = TypeVar('R')  # Type for task result


class WorkerPool(Generic[T, R]):
    """Bounded thread pool for fanning out independent kernel calls

    numpy releases the GIL inside its loops and BLAS calls, so row blocks and
    RNS limbs genuinely overlap.
    """

    def __init__(self,
                 process_func: Optional[Callable[[T], R]] = None,
                 num_workers: int = 4,
                 name: str = "Worker"):
        """
        Initialize worker pool

        Args:
            process_func: Default function applied to each task
            num_workers: Number of worker threads
            name: Base name for worker threads
        """
        self.process_func = process_func
        self.num_workers = max(1, int(num_workers))
        self.name = name
        self.is_shutting_down = False
        self._lock = Lock()
        self._executor: Optional[ThreadPoolExecutor] = None

    def _get_executor(self) -> ThreadPoolExecutor:
        with self._lock:
            if self._executor is None:
                self._executor = ThreadPoolExecutor(
                    max_workers=self.num_workers,
                    thread_name_prefix=self.name,
                )
            return self._executor

    def _resolve(self, func: Optional[Callable[[T], R]]) -> Callable[[T], R]:
        func = func or self.process_func
        if func is None:
            raise ValueError(f"{self.name} pool has no process function")
        return func

    def submit(self, task: T, func: Optional[Callable[[T], R]] = None) -> Future:
        """Queue one task"""
        if self.is_shutting_down:
            raise RuntimeError(f"{self.name} pool is shutting down")
        return self._get_executor().submit(self._resolve(func), task)

    def map(self, tasks: Iterable[T], func: Optional[Callable[[T], R]] = None) -> List[R]:
        """Run every task and return results in input order

        The first task error is logged and re-raised after all tasks settle.
        """
        tasks = list(tasks)
        func = self._resolve(func)
        if self.num_workers == 1 or len(tasks) <= 1:
            return [func(task) for task in tasks]

        futures = [self.submit(task, func) for task in tasks]
        results: List[Any] = []
        first_error: Optional[BaseException] = None
        for i, future in enumerate(futures):
            try:
                results.append(future.result())
            except Exception as e:
                logger.error(f"Error processing task {i} in {self.name} pool: {e}", exc_info=True)
                results.append(None)
                first_error = first_error or e
        if first_error is not None:
            raise first_error
        return results

    def cleanup(self):
        """Clean up resources"""
        try:
            logger.debug(f"Starting {self.name} pool cleanup")
            self.is_shutting_down = True
            with self._lock:
                if self._executor is not None:
                    self._executor.shutdown(wait=True)
                    self._executor = None
            logger.debug(f"Completed {self.name} pool cleanup")
        except Exception as e:
            logger.error(f"Error during cleanup: {e}")

    def __del__(self):
        """Ensure cleanup on deletion"""
        try:
            self.cleanup()
        except Exception:
            pass
