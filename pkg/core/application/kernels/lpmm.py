"""Low-precision matrix multiplication engine

Emulates a matrix unit that multiplies bp-bit operands into 32-bit
accumulators. Products are computed in float64, which is exact while every
dot product stays below 2^53; the accumulator precondition (at most 32 bits)
keeps that comfortably true.
"""

import logging
from typing import Callable, Optional, Tuple, TYPE_CHECKING

import numpy as np

from core.application.kernels.bat import (
    chunk_dtype,
    offline_compile_left,
    offline_compile_right,
    runtime_compile_left,
    runtime_compile_right,
)
from core.application.kernels.modarith import chunk_decompose, chunk_merge, reduce64
from core.domain.entities.bat_matrices import BatMatPlan, SIDE_LEFT, SIDE_RIGHT
from core.domain.entities.modulus import Modulus
from core.domain.entities.op_count import AccMatrix, OpCount, pad_to
from core.domain.entities.reduction_strategy import ReductionStrategy
from core.domain.exceptions import (
    ConfigurationError,
    ParameterRangeError,
    PrecisionError,
    ShapeError,
)

if TYPE_CHECKING:
    from core.infrastructure.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

ACC_BITS = 32
# Row blocks below this size are not worth a thread hop
ROW_BLOCK = 256

# Called on every fresh accumulator matrix before it is merged
AccHook = Callable[[AccMatrix], None]


def accumulator_bits(bp: int, inner: int) -> int:
    """2bp + ceil(log2(inner))"""
    return 2 * bp + max(inner - 1, 0).bit_length()


def mxu_utilization(rows: int, inner: int, cols: int, tile: int = 128) -> float:
    """Useful MACs over MACs issued with every dimension padded to `tile`"""
    padded = pad_to(rows, tile) * pad_to(inner, tile) * pad_to(cols, tile)
    return rows * inner * cols / padded if padded else 0.0


def _exact_product(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return (A.astype(np.float64) @ B.astype(np.float64)).astype(np.uint32)


def matmul_lp(A_dense: np.ndarray, B_dense: np.ndarray, bp: int = 8,
              K: int = 1, ops: Optional[OpCount] = None,
              pool: Optional['WorkerPool'] = None,
              acc_hook: Optional[AccHook] = None) -> AccMatrix:
    """Exact bp-bit x bp-bit product with 32-bit accumulation"""
    A = np.asarray(A_dense)
    B = np.asarray(B_dense)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError(f"Cannot multiply {A.shape} by {B.shape}")
    inner = A.shape[1]
    bits = accumulator_bits(bp, inner)
    if bits > ACC_BITS:
        raise PrecisionError(
            f"Accumulator needs {bits} bits for bp={bp} and inner dimension {inner}"
        )
    limit = 1 << bp
    for name, operand in (('left', A), ('right', B)):
        if operand.size and int(operand.max()) >= limit:
            raise PrecisionError(f"{name} operand entry {int(operand.max())} exceeds {bp} bits")

    rows = A.shape[0]
    if pool is not None and pool.num_workers > 1 and rows >= 2 * ROW_BLOCK:
        starts = range(0, rows, ROW_BLOCK)
        blocks = pool.map(starts, lambda s: _exact_product(A[s:s + ROW_BLOCK], B))
        data = np.concatenate(blocks, axis=0)
    else:
        data = _exact_product(A, B)

    if ops is not None:
        ops.add_matmul(rows, inner, B.shape[1], np.dtype(chunk_dtype(bp)).itemsize)
    max_entry = int(data.max()) if data.size else 0
    acc = AccMatrix(data=data, K=K, V=max(inner // max(K, 1), 1), bp=bp, max_entry=max_entry)
    if acc_hook is not None:
        acc_hook(acc)
    return acc


def merge_reduce(Z_chunk, K: int, m: Modulus,
                 strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                 bp: int = 8, chunks_along: str = 'rows') -> np.ndarray:
    """Merge K accumulator chunks per output entry, then reduce mod q

    ``chunks_along='rows'`` reads output (h, w) from rows hK..hK+K-1 of
    column w (left plans); ``'cols'`` reads it from columns wK..wK+K-1 of
    row h (right plans).
    """
    data = np.asarray(Z_chunk.data if isinstance(Z_chunk, AccMatrix) else Z_chunk,
                      dtype=np.uint64)
    if chunks_along == 'rows':
        if data.shape[0] % K:
            raise ShapeError(f"{data.shape[0]} rows do not split into chunks of {K}")
        grouped = data.reshape(data.shape[0] // K, K, data.shape[1]).transpose(0, 2, 1)
    elif chunks_along == 'cols':
        if data.shape[1] % K:
            raise ShapeError(f"{data.shape[1]} columns do not split into chunks of {K}")
        grouped = data.reshape(data.shape[0], data.shape[1] // K, K)
    else:
        raise ConfigurationError(f"Unknown chunk layout {chunks_along!r}")

    merged = np.asarray(chunk_merge(grouped, bp), dtype=np.uint64)
    return np.asarray(reduce64(merged, m, strategy), dtype=np.uint64)


def _check_plan(plan: BatMatPlan, m: Modulus, bp: int,
                strategy: ReductionStrategy, side: int) -> None:
    if plan.modulus.q != m.q or plan.bp != bp:
        raise ConfigurationError(
            f"Plan compiled for q={plan.modulus.q}, bp={plan.bp}; called with q={m.q}, bp={bp}"
        )
    if plan.side != side:
        raise ConfigurationError("Plan was compiled for the other operand side")
    if plan.domain is not strategy.domain:
        raise ConfigurationError(
            f"Plan in the {plan.domain} domain cannot run with strategy {strategy}"
        )


def mat_mod_mul(A, B, m: Modulus, bp: int = 8,
                strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                plan: Optional[BatMatPlan] = None, ops: Optional[OpCount] = None,
                pool: Optional['WorkerPool'] = None,
                acc_hook: Optional[AccHook] = None) -> np.ndarray:
    """(A @ B) mod q with A known offline and compiled to a BAT plan"""
    if plan is None:
        plan = offline_compile_left(A, m, bp, strategy.domain)
    _check_plan(plan, m, bp, strategy, SIDE_LEFT)
    B = np.asarray(B, dtype=np.uint64)
    if B.ndim != 2 or B.shape[0] != plan.V:
        raise ShapeError(f"Right operand {B.shape} does not match plan inner dimension {plan.V}")
    if B.size and int(B.max()) >= m.q:
        raise ParameterRangeError(f"Right operand entry {int(B.max())} is not a residue mod {m.q}")

    B_dense = runtime_compile_right(B, bp, plan.K)
    acc = matmul_lp(plan.A_dense, B_dense, bp, plan.K, ops, pool, acc_hook)
    if ops is not None:
        ops.modmuls += plan.H * plan.V * B.shape[1]
    return merge_reduce(acc, plan.K, m, strategy, bp, 'rows')


def mat_mod_mul_right(X, B, m: Modulus, bp: int = 8,
                      strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                      plan: Optional[BatMatPlan] = None, ops: Optional[OpCount] = None,
                      pool: Optional['WorkerPool'] = None,
                      acc_hook: Optional[AccHook] = None) -> np.ndarray:
    """(X @ B) mod q with the right factor B known offline"""
    if plan is None:
        plan = offline_compile_right(B, m, bp, strategy.domain)
    _check_plan(plan, m, bp, strategy, SIDE_RIGHT)
    X = np.asarray(X, dtype=np.uint64)
    if X.ndim != 2 or X.shape[1] != plan.H:
        raise ShapeError(f"Left operand {X.shape} does not match plan inner dimension {plan.H}")
    if X.size and int(X.max()) >= m.q:
        raise ParameterRangeError(f"Left operand entry {int(X.max())} is not a residue mod {m.q}")

    X_dense = runtime_compile_left(X, bp, plan.K)
    acc = matmul_lp(X_dense, plan.A_dense, bp, plan.K, ops, pool, acc_hook)
    if ops is not None:
        ops.modmuls += X.shape[0] * plan.H * plan.V
    return merge_reduce(acc, plan.K, m, strategy, bp, 'cols')


def sparse_left_matrix(A, m: Modulus, bp: int = 8) -> np.ndarray:
    """(2K-1)H x KV matrix of unfolded Toeplitz blocks"""
    A = np.asarray(A, dtype=np.uint64)
    H, V = A.shape
    K = m.chunks(bp)
    chunks = chunk_decompose(A, K, bp).data
    sparse = np.zeros((H, 2 * K - 1, V, K), dtype=chunk_dtype(bp))
    for j in range(K):
        sparse[:, j:j + K, :, j] = chunks.transpose(0, 2, 1)
    return sparse.reshape(H * (2 * K - 1), V * K)


def sparse_baseline_matmul(A, B, m: Modulus, bp: int = 8,
                           strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                           pool: Optional['WorkerPool'] = None,
                           acc_hook: Optional[AccHook] = None) -> Tuple[np.ndarray, OpCount]:
    """(A @ B) mod q through unfolded Toeplitz blocks; returns the op count"""
    if strategy.domain is not ReductionStrategy.BARRETT64.domain:
        raise ConfigurationError("The sparse baseline runs in the plain domain only")
    A = np.asarray(A, dtype=np.uint64)
    B = np.asarray(B, dtype=np.uint64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ShapeError(f"Cannot multiply {A.shape} by {B.shape}")
    H, V = A.shape
    K = m.chunks(bp)
    rows = 2 * K - 1

    ops = OpCount()
    acc = matmul_lp(sparse_left_matrix(A, m, bp), runtime_compile_right(B, bp, K),
                    bp, K, ops, pool, acc_hook)
    ops.modmuls += H * V * B.shape[1]
    ops.shift_adds += rows * H * B.shape[1]

    data = acc.data.astype(np.uint64).reshape(H, rows, B.shape[1])
    # Low K rows merge like the dense plan; higher rows would overflow 64 bits
    # when merged, so each is reduced and scaled by 2^(r*bp) mod q
    q = np.uint64(m.q)
    low = np.asarray(chunk_merge(data[:, :K].transpose(0, 2, 1), bp), dtype=np.uint64)
    total = np.asarray(reduce64(low, m, strategy), dtype=np.uint64)
    for r in range(K, rows):
        scale = np.uint64(pow(2, r * bp, m.q))
        term = ((data[:, r] % q) * scale) % q
        total = (total + term) % q
    return total, ops


def reference_mat_mod_mul(A, B, m: Modulus) -> np.ndarray:
    """Big-integer oracle for (A @ B) mod q"""
    A = np.asarray(A).astype(object)
    B = np.asarray(B).astype(object)
    return np.asarray((A @ B) % m.q, dtype=np.uint64)
