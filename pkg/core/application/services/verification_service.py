"""Service for bit-exact verification of kernels against their oracles"""

import logging
from dataclasses import dataclass, field, asdict
from threading import Lock
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.application.services.kernel_cases import KernelCaseBuilder
from core.domain.entities.bench import BENCH_KERNELS, BenchConfig
from core.domain.entities.op_count import AccMatrix, OpCount
from core.domain.entities.reduction_strategy import ReductionStrategy
from core.domain.exceptions import CrossKernelError
from core.infrastructure.config.constants import EXIT_OK, EXIT_VERIFY_FAILED
from core.infrastructure.utils.rng import make_rng
from core.infrastructure.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)


@dataclass
class VerificationResult:
    """Outcome of one verification cell"""

    kernel: str
    strategy: str
    batch: int
    passed: bool
    index: Optional[Tuple[int, ...]] = None
    expected: Optional[int] = None
    actual: Optional[int] = None
    message: str = ''
    fault: str = ''
    ops: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if self.index is not None:
            data['index'] = list(self.index)
        return data


def inject_fault(values: np.ndarray, rng: np.random.Generator) -> Tuple[int, ...]:
    """Flip one low bit of one output word in place; returns its index"""
    flat = values.reshape(-1)
    position = int(rng.integers(0, flat.size))
    bit = int(rng.integers(0, 16))
    flat[position] ^= np.uint64(1 << bit)
    return tuple(int(i) for i in np.unravel_index(position, values.shape))


class AccumulatorFault:
    """Accumulator hook that flips one bit of the first matrix it sees

    The bit sits below bp, so the corrupted entry stays a valid 32-bit
    accumulator and the error travels through merge and reduction.
    """

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.where: Optional[Tuple[int, ...]] = None
        self._lock = Lock()

    def __call__(self, acc: AccMatrix) -> None:
        with self._lock:
            if self.where is not None or acc.data.size == 0:
                return
            position = int(self.rng.integers(0, acc.data.size))
            bit = int(self.rng.integers(0, acc.bp))
            index = np.unravel_index(position, acc.data.shape)
            acc.data[index] ^= acc.data.dtype.type(1 << bit)
            self.where = tuple(int(i) for i in index)


def first_divergence(expected: np.ndarray, actual: np.ndarray) -> Optional[Tuple[int, ...]]:
    """Index of the first differing element, None when equal"""
    diff = np.argwhere(expected != actual)
    if diff.size == 0:
        return None
    return tuple(int(i) for i in diff[0])


class VerificationService:
    """Runs kernels on seeded inputs and compares them with in-repo oracles"""

    def __init__(self, case_builder: KernelCaseBuilder, worker_pool: Optional[WorkerPool] = None):
        self.case_builder = case_builder
        self.worker_pool = worker_pool

    def verify_cell(self, cfg: BenchConfig, batch: int,
                    strategy: ReductionStrategy) -> VerificationResult:
        """Verify one (kernel, batch, strategy) cell"""
        base = {'kernel': cfg.kernel, 'strategy': strategy.value, 'batch': batch}
        try:
            case = self.case_builder.build(cfg, batch, strategy)
            ops = OpCount()
            if cfg.inject_fault:
                actual, base['fault'] = self._run_with_fault(cfg, case, ops)
            else:
                actual = np.array(case.run(ops), dtype=np.uint64)
            expected = np.asarray(case.expected(), dtype=np.uint64)
        except CrossKernelError as e:
            logger.error(f"Verification of {cfg.kernel} ({strategy}) failed to run: {e}")
            return VerificationResult(passed=False, message=str(e), **base)

        if expected.shape != actual.shape:
            message = f"shape mismatch: expected {expected.shape}, got {actual.shape}"
            logger.error(f"{cfg.kernel} ({strategy}): {message}")
            return VerificationResult(passed=False, message=message, ops=ops.to_dict(), **base)

        index = first_divergence(expected, actual)
        if index is None:
            logger.info(f"{cfg.kernel} ({strategy}, batch={batch}) verified")
            return VerificationResult(passed=True, ops=ops.to_dict(), **base)

        mismatches = int(np.count_nonzero(expected != actual))
        result = VerificationResult(
            passed=False,
            index=index,
            expected=int(expected[index]),
            actual=int(actual[index]),
            message=f"{mismatches} mismatching element(s)",
            ops=ops.to_dict(),
            **base,
        )
        logger.error(
            f"{cfg.kernel} ({strategy}) diverges at {index}: "
            f"expected {result.expected}, got {result.actual}"
        )
        return result

    def _run_with_fault(self, cfg: BenchConfig, case, ops: OpCount) -> Tuple[np.ndarray, str]:
        """Run a cell with one flipped bit, in an accumulator when the kernel has one"""
        rng = make_rng(cfg.seed, f"fault:{cfg.kernel}")
        if case.run_with_hook is not None:
            fault = AccumulatorFault(rng)
            actual = np.array(case.run_with_hook(ops, fault), dtype=np.uint64)
            if fault.where is not None:
                logger.info(f"Injected fault into {cfg.kernel} accumulator at {fault.where}")
                return actual, 'accumulator'
        else:
            actual = np.array(case.run(ops), dtype=np.uint64)
        where = inject_fault(actual, rng)
        logger.info(f"Injected fault into {cfg.kernel} output at {where}")
        return actual, 'output'

    def run_verify(self, cfg: BenchConfig, all_kernels: bool = False) -> Tuple[int, List[VerificationResult]]:
        """Verify every configured cell; exit code 0 iff all are bit-exact"""
        kernels = BENCH_KERNELS if all_kernels else (cfg.kernel,)
        cells = []
        for kernel in kernels:
            kernel_cfg = cfg if kernel == cfg.kernel else cfg.with_kernel(kernel)
            for batch in cfg.batch:
                for strategy in self._strategies_for(kernel_cfg):
                    cells.append((kernel_cfg, batch, strategy))

        if cfg.parallel_verify and self.worker_pool is not None and len(cells) > 1:
            results = self.worker_pool.map(cells, lambda cell: self.verify_cell(*cell))
        else:
            results = [self.verify_cell(*cell) for cell in cells]

        failed = [r for r in results if not r.passed]
        logger.info(f"Verified {len(results) - len(failed)}/{len(results)} cells")
        return (EXIT_VERIFY_FAILED if failed else EXIT_OK), results

    def _strategies_for(self, cfg: BenchConfig) -> List[ReductionStrategy]:
        """Configured strategies, minus those a kernel cannot run"""
        strategies = list(cfg.strategies)
        if cfg.kernel == 'lazyreduce' or (cfg.kernel == 'matmodmul' and not cfg.use_bat):
            kept = [s for s in strategies if s is not ReductionStrategy.MONTGOMERY]
            strategies = kept or [ReductionStrategy.BARRETT64]
        return strategies
