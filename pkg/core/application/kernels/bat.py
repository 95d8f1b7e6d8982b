"""Basis-aligned transformation (BAT) compiler

Turns a known residue (or a matrix of them) into dense bp-bit chunk matrices
whose low-precision products merge back to the modular product. Also holds
the lazy-reduction matrix and the convolution fallback for two unknown
operands.
"""

import logging
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import toeplitz

from core.application.kernels.modarith import (
    ArrayLike,
    as_u64,
    unwrap,
    barrett_reduce,
    chunk_decompose,
    chunk_merge,
    reduce64,
)
from core.domain.entities.bat_matrices import (
    BatMatPlan,
    BatScalarMatrix,
    LazyReductionMatrix,
    ToeplitzMatrix,
    SIDE_LEFT,
    SIDE_RIGHT,
)
from core.domain.entities.modulus import Modulus
from core.domain.entities.op_count import OpCount
from core.domain.entities.reduction_strategy import Domain, ReductionStrategy
from core.domain.exceptions import (
    BatCompileError,
    ConfigurationError,
    ParameterRangeError,
    ShapeError,
)

logger = logging.getLogger(__name__)


def chunk_dtype(bp: int):
    """Storage dtype of one compiled chunk"""
    return np.uint8 if bp <= 8 else np.uint16


def _check_residue_matrix(A: np.ndarray, m: Modulus) -> None:
    if A.ndim != 2:
        raise ShapeError(f"Expected a 2-D residue matrix, got shape {A.shape}")
    if A.size and int(A.max()) >= m.q:
        raise ParameterRangeError(f"Entry {int(A.max())} is not a residue mod {m.q}")


def _domain_value(a: np.ndarray, m: Modulus, domain: Domain) -> np.ndarray:
    """The multiplicand actually encoded: a, or a * 2^32 mod q"""
    if domain is Domain.MONTGOMERY:
        return (a * np.uint64(m.mont_r)) % np.uint64(m.q)
    return a


# ---------------------------------------------------------------------------
# Toeplitz construction, folding and carrying
# ---------------------------------------------------------------------------

def construct_toeplitz(chunks: ArrayLike, bp: int = 8) -> ToeplitzMatrix:
    """(2K-1) x K matrix with X[i+j, j] = a_i"""
    c = np.asarray(chunks, dtype=np.uint64).ravel()
    K = c.size
    if K == 0:
        raise ShapeError("Toeplitz construction needs at least one chunk")
    first_col = np.concatenate([c, np.zeros(K - 1, dtype=np.uint64)])
    first_row = np.zeros(K, dtype=np.uint64)
    first_row[0] = c[0]
    data = np.asarray(toeplitz(first_col, first_row), dtype=np.uint64)
    return ToeplitzMatrix(data=data, K=K, bp=bp)


def bat_fold(X: ToeplitzMatrix, m: Modulus) -> ToeplitzMatrix:
    """Fold every nonzero bottom-block entry into the top rows of its column

    Entry e at row r stands for e * 2^(r*bp); it is replaced by the chunks of
    that value mod q, which keeps every column's merge congruent mod q.
    """
    K, bp = X.K, X.bp
    data = X.data.copy()
    rows, cols = np.nonzero(data[K:])
    for r, j in zip(rows + K, cols):
        folded = (int(data[r, j]) << (int(r) * bp)) % m.q
        data[:K, j] += chunk_decompose(folded, K, bp).data
        data[r, j] = 0
    if rows.size:
        logger.debug(f"Folded {rows.size} bottom entries for q={m.q}")
    return ToeplitzMatrix(data=data, K=K, bp=bp)


def carry_propagate(X, bp: Optional[int] = None):
    """Push everything above bp bits one row down, column by column

    The last row keeps its excess; the compile loop folds it next round.
    Accepts a ToeplitzMatrix or a raw chunk array (then ``bp`` is required).
    """
    if isinstance(X, ToeplitzMatrix):
        return ToeplitzMatrix(data=carry_propagate(X.data, X.bp), K=X.K, bp=X.bp)
    if bp is None:
        raise ConfigurationError("carry_propagate on a raw array needs bp")

    data = np.array(X, dtype=np.uint64, copy=True)
    shift = np.uint64(bp)
    mask = np.uint64((1 << bp) - 1)
    for r in range(data.shape[0] - 1):
        carry = data[r] >> shift
        data[r] &= mask
        data[r + 1] += carry
    return data


# ---------------------------------------------------------------------------
# Scalar compilation
# ---------------------------------------------------------------------------

def offline_compile_scalar(a: int, m: Modulus, bp: int = 8,
                           domain: Domain = Domain.PLAIN) -> BatScalarMatrix:
    """Compile a known residue by alternating carry and fold passes"""
    a = int(a)
    if not 0 <= a < m.q:
        raise ParameterRangeError(f"{a} is not a residue mod {m.q}")
    K = m.chunks(bp)
    a_eff = int(_domain_value(np.uint64(a), m, domain))
    X = construct_toeplitz(chunk_decompose(a_eff, K, bp).data, bp)

    limit = 1 << bp
    for iteration in range(4 * K):
        X = carry_propagate(X)
        if not X.bottom_block.any() and bool(np.all(X.data < limit)):
            logger.debug(f"Compiled a={a} mod {m.q} in {iteration + 1} rounds")
            return BatScalarMatrix(
                matrix=X.top_block.astype(chunk_dtype(bp)),
                a=a, modulus=m, bp=bp, domain=domain,
            )
        X = bat_fold(X, m)

    raise BatCompileError(f"Fold/carry loop for a={a} mod {m.q} did not settle in {4 * K} rounds")


def direct_bat_blocks(A: ArrayLike, m: Modulus, bp: int = 8,
                      domain: Domain = Domain.PLAIN) -> np.ndarray:
    """Chunks of (A * 2^(j*bp)) mod q, shape A.shape + (K shifts, K chunks)"""
    a = np.asarray(A, dtype=np.uint64)
    K = m.chunks(bp)
    a_eff = _domain_value(a, m, domain)
    shifts = np.arange(K, dtype=np.uint64) * np.uint64(bp)
    # a < 2^31 and the largest shift is below log2q, so this stays under 2^62
    shifted = (a_eff[..., None] << shifts) % np.uint64(m.q)
    mask = np.uint64((1 << bp) - 1)
    return (shifted[..., None] >> shifts) & mask


def direct_scalar_bat(a: int, m: Modulus, bp: int = 8,
                      domain: Domain = Domain.PLAIN) -> BatScalarMatrix:
    """Column j = chunks of (a << j*bp) mod q, fully reduced"""
    a = int(a)
    if not 0 <= a < m.q:
        raise ParameterRangeError(f"{a} is not a residue mod {m.q}")
    blocks = direct_bat_blocks(a, m, bp, domain)
    return BatScalarMatrix(
        matrix=blocks.T.astype(chunk_dtype(bp)), a=a, modulus=m, bp=bp, domain=domain,
    )


def _check_domain(domain: Domain, strategy: ReductionStrategy) -> None:
    if strategy.domain is not domain:
        raise ConfigurationError(
            f"Plan compiled in the {domain} domain cannot run with strategy {strategy}"
        )


def bat_scalar_mulmod(M: BatScalarMatrix, b: ArrayLike, m: Modulus,
                      strategy: Optional[ReductionStrategy] = None,
                      ops: Optional[OpCount] = None):
    """(a*b) mod q from the compiled matrix of a; b may be an array"""
    if strategy is None:
        strategy = ReductionStrategy.MONTGOMERY if M.domain is Domain.MONTGOMERY \
            else ReductionStrategy.BARRETT64
    _check_domain(M.domain, strategy)
    if M.modulus.q != m.q:
        raise ConfigurationError(f"Matrix compiled for q={M.modulus.q}, called with q={m.q}")

    b_arr, scalar = as_u64(b)
    if b_arr.size and int(b_arr.max()) >= m.q:
        raise ParameterRangeError(f"{int(b_arr.max())} is not a residue mod {m.q}")
    K, bp = M.K, M.bp
    b_chunks = chunk_decompose(b_arr, K, bp).data
    # psum_j = sum_k M[j, k] * b_k, each below K * 2^(2bp)
    psums = b_chunks @ M.matrix.astype(np.uint64).T
    z = chunk_merge(psums, bp)
    if ops is not None:
        count = max(b_arr.size, 1)
        ops.multiplies += K * K * count
        ops.shift_adds += K * count
        ops.modmuls += count
    return unwrap(np.asarray(reduce64(z, m, strategy), dtype=np.uint64), scalar)


def sparse_scalar_mulmod(a: int, b: ArrayLike, m: Modulus, bp: int = 8,
                         strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                         ops: Optional[OpCount] = None):
    """Baseline: unfolded Toeplitz of a times chunks of b, 2K-1 shift-adds"""
    _check_domain(Domain.PLAIN, strategy)
    K = m.chunks(bp)
    X = construct_toeplitz(chunk_decompose(int(a), K, bp).data, bp)
    b_arr, scalar = as_u64(b)
    b_chunks = chunk_decompose(b_arr, K, bp).data
    psums = b_chunks @ X.data.T
    z = chunk_merge(psums, bp)
    if ops is not None:
        count = max(b_arr.size, 1)
        ops.multiplies += (2 * K - 1) * K * count
        ops.shift_adds += (2 * K - 1) * count
        ops.modmuls += count
    return unwrap(np.asarray(reduce64(z, m, strategy), dtype=np.uint64), scalar)


# ---------------------------------------------------------------------------
# Matrix compilation
# ---------------------------------------------------------------------------

def offline_compile_left(A: ArrayLike, m: Modulus, bp: int = 8,
                         domain: Domain = Domain.PLAIN) -> BatMatPlan:
    """KH x KV dense plan; block (h, v) is the BAT matrix of A[h, v]"""
    A = np.asarray(A, dtype=np.uint64)
    _check_residue_matrix(A, m)
    H, V = A.shape
    K = m.chunks(bp)
    chunks = direct_bat_blocks(A, m, bp, domain)
    # chunks[h, v, shift j, chunk k] -> dense[h*K + k, v*K + j]
    dense = chunks.transpose(0, 3, 1, 2).reshape(H * K, V * K).astype(chunk_dtype(bp))
    logger.debug(f"Compiled left plan {H}x{V} -> {dense.shape} for q={m.q}")
    return BatMatPlan(
        A_dense=dense, H=H, V=V, K=K, bp=bp, modulus=m, domain=domain, side=SIDE_LEFT,
    )


def offline_compile_right(B: ArrayLike, m: Modulus, bp: int = 8,
                          domain: Domain = Domain.PLAIN) -> BatMatPlan:
    """KV x KW dense plan for a known right factor B (V x W)

    Block (v, w) is the transposed BAT matrix of B[v, w], so runtime chunks
    laid along rows (``runtime_compile_left``) multiply it directly and the
    output chunks come out along columns.
    """
    B = np.asarray(B, dtype=np.uint64)
    _check_residue_matrix(B, m)
    V, W = B.shape
    K = m.chunks(bp)
    chunks = direct_bat_blocks(B, m, bp, domain)
    # chunks[v, w, shift s, chunk c] -> dense[v*K + s, w*K + c]
    dense = chunks.transpose(0, 2, 1, 3).reshape(V * K, W * K).astype(chunk_dtype(bp))
    logger.debug(f"Compiled right plan {V}x{W} -> {dense.shape} for q={m.q}")
    return BatMatPlan(
        A_dense=dense, H=V, V=W, K=K, bp=bp, modulus=m, domain=domain, side=SIDE_RIGHT,
    )


def runtime_compile_right(B: ArrayLike, bp: int = 8, K: int = 4) -> np.ndarray:
    """KV x W: B_dense[v*K + k, w] = k-th chunk of B[v, w]"""
    B = np.asarray(B, dtype=np.uint64)
    if B.ndim != 2:
        raise ShapeError(f"Expected a 2-D matrix, got shape {B.shape}")
    V, W = B.shape
    data = chunk_decompose(B, K, bp).data
    return data.transpose(0, 2, 1).reshape(V * K, W).astype(chunk_dtype(bp))


def runtime_compile_left(X: ArrayLike, bp: int = 8, K: int = 4) -> np.ndarray:
    """H x KV: X_dense[h, v*K + k] = k-th chunk of X[h, v]"""
    X = np.asarray(X, dtype=np.uint64)
    if X.ndim != 2:
        raise ShapeError(f"Expected a 2-D matrix, got shape {X.shape}")
    H, V = X.shape
    return chunk_decompose(X, K, bp).data.reshape(H, V * K).astype(chunk_dtype(bp))


# ---------------------------------------------------------------------------
# Lazy reduction
# ---------------------------------------------------------------------------

def build_lazy_reduction_matrix(m: Modulus, bp: int = 8) -> LazyReductionMatrix:
    """R[k, l] = l-th chunk of 2^(bp*(K+k)) mod q"""
    K = m.chunks(bp)
    rows = [pow(2, bp * (K + k), m.q) for k in range(K)]
    R = chunk_decompose(np.array(rows, dtype=np.uint64), K, bp).data
    return LazyReductionMatrix(R=R, modulus=m, K=K, bp=bp)


def lazy_partial_reduce(psum: ArrayLike, R: LazyReductionMatrix, ops: Optional[OpCount] = None):
    """Value congruent to psum mod q, below (K * 2^bp + 1) * 2^(K*bp)

    The high K chunks go through R in one low-precision product; the low K
    chunks pass through untouched.
    """
    z, scalar = as_u64(psum)
    K, bp = R.K, R.bp
    width = K * bp
    if 2 * width < 64 and z.size and int(z.max()) >= (1 << (2 * width)):
        raise ParameterRangeError(f"Partial sum {int(z.max())} exceeds {2 * K} chunks of {bp} bits")

    low = z & np.uint64((1 << width) - 1)
    high = z >> np.uint64(width)
    high_chunks = chunk_decompose(high, K, bp).data
    folded = chunk_merge(high_chunks @ R.R.astype(np.uint64), bp)
    if ops is not None:
        ops.add_matmul(max(z.size, 1), K, K)
    return unwrap(np.asarray(low + folded, dtype=np.uint64), scalar)


def lazy_reduce64(psum: ArrayLike, R: LazyReductionMatrix, m: Modulus,
                  strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                  ops: Optional[OpCount] = None):
    """psum mod q: lazy partial reduction then one canonical reduce64"""
    if strategy is ReductionStrategy.MONTGOMERY:
        raise ConfigurationError("Lazy reduction returns plain residues; use native or barrett64")
    partial = lazy_partial_reduce(psum, R, ops)
    return reduce64(partial, m, strategy)


# ---------------------------------------------------------------------------
# Convolution fallback for two unknown operands
# ---------------------------------------------------------------------------

def hpsm_conv_partials(a: ArrayLike, b: ArrayLike, K: int, bp: int = 8) -> np.ndarray:
    """The 2K-1 partial sums p_t = sum_{i+j=t} a_i * b_j, each below K * 2^(2bp)"""
    a_chunks = chunk_decompose(a, K, bp).data
    b_chunks = chunk_decompose(b, K, bp).data
    if a_chunks.shape != b_chunks.shape:
        raise ShapeError(f"Operand shapes differ: {a_chunks.shape[:-1]} vs {b_chunks.shape[:-1]}")
    pad = [(0, 0)] * (a_chunks.ndim - 1) + [(K - 1, K - 1)]
    windows = sliding_window_view(np.pad(a_chunks, pad), K, axis=-1)
    return np.einsum('...tk,...k->...t', windows, b_chunks[..., ::-1])


def hpsm_conv(a: ArrayLike, b: ArrayLike, m: Modulus, bp: int = 8,
              ops: Optional[OpCount] = None):
    """(a*b) mod q by 1-D chunk convolution, shifted accumulation and Barrett"""
    a_arr, a_scalar = as_u64(a)
    b_arr, b_scalar = as_u64(b)
    for arr in (a_arr, b_arr):
        if arr.size and int(arr.max()) >= m.q:
            raise ParameterRangeError(f"{int(arr.max())} is not a residue mod {m.q}")
    K = m.chunks(bp)
    partials = hpsm_conv_partials(a_arr, b_arr, K, bp)
    # The partials merge back to a*b, which residues keep below q^2
    psum = chunk_merge(partials, bp, bound=(m.q - 1) ** 2)
    if ops is not None:
        count = max(a_arr.size, 1)
        ops.multiplies += K * K * count
        ops.shift_adds += (2 * K - 1) * count
        ops.modmuls += count
    return unwrap(np.asarray(barrett_reduce(psum, m), dtype=np.uint64), a_scalar and b_scalar)
