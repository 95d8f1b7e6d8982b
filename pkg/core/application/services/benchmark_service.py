"""Service for timing kernels over batch and reduction-strategy sweeps"""

import logging
from typing import List, Optional

import numpy as np

from core.application.services.kernel_cases import KernelCase, KernelCaseBuilder
from core.domain.entities.bench import BenchConfig, BenchRecord
from core.domain.entities.op_count import OpCount
from core.domain.entities.reduction_strategy import ReductionStrategy
from core.domain.exceptions import CrossKernelError
from core.infrastructure.utils.timing import time_call
from core.infrastructure.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)


class BenchmarkService:
    """Warmup plus timed iterations per (kernel, batch, strategy) cell

    Cells run one after another; the worker pool is only handed to kernels
    that split their own work.
    """

    def __init__(self, case_builder: KernelCaseBuilder, worker_pool: Optional[WorkerPool] = None):
        self.case_builder = case_builder
        self.worker_pool = worker_pool

    def run_benchmark(self, cfg: BenchConfig) -> List[BenchRecord]:
        """One record per cell, batch-major"""
        records = []
        for batch in cfg.batch:
            for strategy in cfg.strategies:
                records.append(self.run_cell(cfg, batch, strategy))
        return records

    def run_cell(self, cfg: BenchConfig, batch: int, strategy: ReductionStrategy) -> BenchRecord:
        cell = f"{cfg.kernel} batch={batch} strategy={strategy}"
        try:
            case = self.case_builder.build(cfg, batch, strategy, self.worker_pool)
            ops = OpCount()
            output = np.asarray(case.run(ops), dtype=np.uint64)
            verified = self._check(case, output) if cfg.check_output else False
            stats = time_call(lambda: case.run(None), cfg.iters, cfg.warmup)
        except MemoryError:
            logger.error(f"Out of memory in cell {cell}", exc_info=True)
            raise CrossKernelError(f"Cell {cell} ran out of memory")
        except CrossKernelError as e:
            logger.error(f"Cell {cell} failed: {e}")
            raise

        record = BenchRecord(
            kernel=cfg.kernel,
            batch=batch,
            strategy=strategy.value,
            use_bat=cfg.use_bat,
            iters=cfg.iters,
            min_us=stats.min_us,
            median_us=stats.median_us,
            mean_us=stats.mean_us,
            throughput_per_s=stats.throughput(batch),
            mults=ops.multiplies if ops.multiplies else ops.modmuls,
            perm_ops=ops.perm_ops,
            verified=verified,
            modmuls=ops.modmuls,
            bytes_lhs=ops.bytes_lhs,
            shift_adds=ops.shift_adds,
            mxu_utilization=ops.mxu_utilization,
            label=case.label,
            **case.shape,
        )
        logger.info(
            f"{case.label} batch={batch} {strategy}: median {record.median_us:.1f} us, "
            f"{record.throughput_per_s:.1f} kernels/s"
        )
        return record

    @staticmethod
    def _check(case: KernelCase, output: np.ndarray) -> bool:
        expected = np.asarray(case.expected(), dtype=np.uint64)
        ok = expected.shape == output.shape and bool(np.array_equal(expected, output))
        if not ok:
            logger.error(f"{case.label}: output differs from the oracle")
        return ok
