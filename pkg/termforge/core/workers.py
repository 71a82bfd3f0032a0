from __future__ import annotations

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


class BaseWorkerBackend(ABC):
    @abstractmethod
    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Apply ``fn`` to every item and return results in input order."""


class ImmediateBackend(BaseWorkerBackend):
    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        return [fn(item) for item in items]


class ThreadBackend(BaseWorkerBackend):
    def __init__(self, max_workers: int):
        if max_workers < 1:
            raise ValueError("max_workers_must_be_positive")
        self.max_workers = max_workers

    def map_ordered(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        with ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix="termforge") as pool:
            return list(pool.map(fn, items))


def get_worker_backend(workers: int) -> BaseWorkerBackend:
    if workers <= 1:
        return ImmediateBackend()
    return ThreadBackend(workers)


__all__ = ["BaseWorkerBackend", "ImmediateBackend", "ThreadBackend", "get_worker_backend"]
