"""Monotonic wall-clock timing for benchmark cells"""

import statistics
import time
from dataclasses import dataclass
from typing import Callable, List


@dataclass(frozen=True)
class TimingStats:
    """Per-iteration wall times in seconds"""

    samples: List[float]

    @property
    def total(self) -> float:
        return sum(self.samples)

    @property
    def min_us(self) -> float:
        return min(self.samples) * 1e6

    @property
    def median_us(self) -> float:
        return statistics.median(self.samples) * 1e6

    @property
    def mean_us(self) -> float:
        return statistics.fmean(self.samples) * 1e6

    def throughput(self, batch: int) -> float:
        """Kernels per second: batch * iters / total time"""
        total = self.total
        return batch * len(self.samples) / total if total > 0 else float('inf')


def time_call(fn: Callable[[], object], iters: int, warmup: int = 0) -> TimingStats:
    """Run fn warmup times untimed, then iters times under perf_counter"""
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(iters):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return TimingStats(samples)
