"""Negacyclic NTT kernels

Conventions: psi is a primitive 2N-th root of unity and omega = psi^2. The
transform evaluates a at the odd powers psi^(2k+1). Fast paths emit the
result in bit-reversed order, out[i] = a_hat[brv(i)], and the inverse
consumes that order. Every routine accepts a (..., N) batch.
"""

import logging
import math
from typing import List, Optional, Tuple, TYPE_CHECKING

import numpy as np

from core.application.kernels.bat import offline_compile_left, offline_compile_right
from core.application.kernels.lpmm import AccHook, mat_mod_mul, mat_mod_mul_right
from core.application.kernels.modarith import (
    find_primitive_root,
    is_primitive_root,
    mulmod,
    shoup_precompute,
    to_montgomery,
    vec_mod_elementwise,
)
from core.domain.entities.modulus import Modulus
from core.domain.entities.ntt_plan import NttPlan, PermIndex
from core.domain.entities.op_count import OpCount
from core.domain.entities.reduction_strategy import Domain, ReductionStrategy
from core.domain.exceptions import ParameterRangeError, RootOfUnityError, ShapeError

if TYPE_CHECKING:
    from core.infrastructure.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

MXU_DIM = 128


def _log2(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ParameterRangeError(f"{n} is not a power of two")
    return n.bit_length() - 1


def _check_ntt_params(N: int, m: Modulus, psi: int) -> None:
    _log2(N)
    if (m.q - 1) % (2 * N):
        raise RootOfUnityError(f"q={m.q} is not 1 mod 2N={2 * N}")
    if not is_primitive_root(psi, 2 * N, m):
        raise RootOfUnityError(f"psi={psi} is not a primitive {2 * N}-th root of unity mod {m.q}")


def _as_vectors(a, m: Modulus) -> np.ndarray:
    arr = np.asarray(a, dtype=np.uint64)
    if arr.ndim == 0:
        raise ShapeError("Expected a vector or a batch of vectors")
    if arr.size and int(arr.max()) >= m.q:
        raise ParameterRangeError(f"{int(arr.max())} is not a residue mod {m.q}")
    return arr


def psi_powers(psi: int, count: int, m: Modulus) -> np.ndarray:
    """psi^e mod q for e in [0, count)"""
    out = np.empty(count, dtype=np.uint64)
    acc = 1
    for e in range(count):
        out[e] = acc
        acc = acc * psi % m.q
    return out


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------

def bit_reverse_indices(n: int) -> np.ndarray:
    bits = _log2(n)
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def bit_reverse_perm(n: int) -> PermIndex:
    """i -> bit reversal of i in log2(n) bits"""
    return PermIndex(bit_reverse_indices(n))


def bit_complement_shuffle(v, group: int) -> np.ndarray:
    """Within each group, swap offset i with offset i XOR group/2"""
    v = np.asarray(v)
    n = v.shape[-1]
    _log2(group)
    if group < 2 or n % group:
        raise ShapeError(f"Group {group} does not divide length {n}")
    idx = np.arange(n) ^ (group // 2)
    return v[..., idx]


# ---------------------------------------------------------------------------
# Reference transforms
# ---------------------------------------------------------------------------

def naive_negacyclic_ntt(a, m: Modulus, psi: int) -> np.ndarray:
    """a_hat[k] = sum_j a_j psi^((2k+1)j) mod q, natural order, O(N^2)"""
    a = _as_vectors(a, m)
    N = a.shape[-1]
    _check_ntt_params(N, m, psi)
    q = np.uint64(m.q)
    pw = psi_powers(psi, 2 * N, m)
    k = np.arange(N, dtype=np.int64)

    out = np.zeros(a.shape, dtype=np.uint64)
    for j in range(N):
        column = pw[((2 * k + 1) * j) % (2 * N)]
        out = (out + a[..., j:j + 1] * column) % q
    return out


def ct_ntt(a, m: Modulus, psi: int,
           strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
           ops: Optional[OpCount] = None) -> np.ndarray:
    """Radix-2 Cooley-Tukey negacyclic NTT, output bit-reversed

    Stage s runs N/2 butterflies (u + w*v, u - w*v) with w = psi^brv(2^s + i).
    """
    a = _as_vectors(a, m)
    N = a.shape[-1]
    _check_ntt_params(N, m, psi)
    q = np.uint64(m.q)
    zetas = psi_powers(psi, N, m)[bit_reverse_indices(N)] if N > 1 else np.ones(1, np.uint64)

    b = a.copy()
    lead = b.shape[:-1]
    groups, half = 1, N // 2
    while groups < N:
        view = b.reshape(lead + (groups, 2, half))
        w = np.broadcast_to(zetas[groups:2 * groups][:, None], (groups, half))
        u = view[..., 0, :]
        v = np.asarray(mulmod(view[..., 1, :], np.broadcast_to(w, u.shape), m, strategy),
                       dtype=np.uint64)
        top = u + v
        bottom = u + q - v
        view = np.stack([np.where(top >= q, top - q, top),
                         np.where(bottom >= q, bottom - q, bottom)], axis=-2)
        b = view.reshape(lead + (N,))
        groups, half = groups * 2, half // 2

    if ops is not None:
        batch = int(np.prod(lead)) if lead else 1
        ops.modmuls += batch * (N // 2) * _log2(N)
    return b


def _modmatmul_rows(W: np.ndarray, X: np.ndarray, q: np.uint64) -> np.ndarray:
    """(W @ X) mod q over the second-to-last axis of X, exact in uint64"""
    out = np.zeros(X.shape[:-2] + (W.shape[0], X.shape[-1]), dtype=np.uint64)
    for r in range(W.shape[1]):
        out = (out + W[:, r:r + 1] * X[..., r:r + 1, :]) % q
    return out


def four_step_ntt(a, R: int, C: int, m: Modulus, psi: int,
                  bit_reversed: bool = False,
                  ops: Optional[OpCount] = None) -> np.ndarray:
    """Classic 4-step NTT with an explicit transpose

    The psi pre-twist is applied to the input before the column transforms.
    The result is in natural order; ``bit_reversed`` adds the final reorder
    into the fast-path order.
    """
    a = _as_vectors(a, m)
    N = a.shape[-1]
    if R * C != N:
        raise ShapeError(f"R*C = {R * C} does not equal N = {N}")
    _log2(R)
    _log2(C)
    _check_ntt_params(N, m, psi)
    q = np.uint64(m.q)
    pw = psi_powers(psi, 2 * N, m)
    lead = a.shape[:-1]
    batch = int(np.prod(lead)) if lead else 1

    twisted = (a * pw[:N]) % q
    X = twisted.reshape(lead + (R, C))
    r = np.arange(R, dtype=np.int64)
    c = np.arange(C, dtype=np.int64)
    # omega^(C*k0*r) for the length-R column transforms
    col_tf = pw[(2 * C * np.outer(r, r)) % (2 * N)]
    Y = _modmatmul_rows(col_tf, X, q)
    Y = (Y * pw[(2 * np.outer(r, c)) % (2 * N)]) % q

    Yt = np.swapaxes(Y, -1, -2).copy()
    row_tf = pw[(2 * R * np.outer(c, c)) % (2 * N)]
    Z = _modmatmul_rows(row_tf, Yt, q)
    out = Z.reshape(lead + (N,))

    if ops is not None:
        ops.modmuls += batch * (N + R * R * C + N + C * C * R)
        ops.perm_ops += batch * N
    if bit_reversed:
        out = bit_reverse_perm(N).apply(out)
        if ops is not None:
            ops.perm_ops += batch * N
    return out


# ---------------------------------------------------------------------------
# Layout-invariant 3-step NTT
# ---------------------------------------------------------------------------

def default_rc(N: int) -> Tuple[int, int]:
    """R = min(128, 2^floor(log2(N)/2)), C = N/R"""
    R = min(MXU_DIM, 1 << (_log2(N) // 2))
    return R, N // R


def rc_candidates(N: int) -> List[Tuple[int, int]]:
    """(128, N/128), (sqrt N, sqrt N) and (N/128, 128) where they are valid"""
    logn = _log2(N)
    root = 1 << (logn // 2)
    out: List[Tuple[int, int]] = []
    for R in (MXU_DIM, root, N // MXU_DIM):
        if R < 1 or N % R:
            continue
        pair = (R, N // R)
        if pair not in out:
            out.append(pair)
    return out


def step3_base_matrix(C: int, R: int, m: Modulus, psi: int) -> np.ndarray:
    """Unpermuted step-3 twiddle matrix omega^(R*c*c'); symmetric"""
    N = R * C
    pw = psi_powers(psi, 2 * N, m)
    c = np.arange(C, dtype=np.int64)
    return pw[(2 * R * np.outer(c, c)) % (2 * N)]


def compile_ntt_plan(N: int, R: Optional[int], C: Optional[int], m: Modulus,
                     bp: int = 8,
                     strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                     psi: Optional[int] = None) -> NttPlan:
    """Build and BAT-compile the forward and inverse 3-step matrices

    Rows of the step-1 matrix and of the twiddle matrix are permuted by
    bit reversal, columns of the step-3 matrix likewise, so the output lands
    in bit-reversed order with no runtime shuffle. The psi pre-twist sits in
    the step-1 matrix; N^-1 sits in the inverse step-1 matrix.
    """
    if R is None or C is None:
        R, C = default_rc(N) if R is None and C is None else (R or N // C, C or N // R)
    if R * C != N:
        raise ShapeError(f"R*C = {R * C} does not equal N = {N}")
    _log2(R)
    _log2(C)
    if psi is None:
        if (m.q - 1) % (2 * N):
            raise RootOfUnityError(f"q={m.q} is not 1 mod 2N={2 * N}")
        psi = find_primitive_root(m, 2 * N)
    _check_ntt_params(N, m, psi)

    two_n = 2 * N
    pw = psi_powers(psi, two_n, m)
    q = np.uint64(m.q)
    brv_r = bit_reverse_indices(R)
    brv_c = bit_reverse_indices(C)
    r = np.arange(R, dtype=np.int64)
    c = np.arange(C, dtype=np.int64)

    # Unpermuted step-1 base: TF_R[i, r] = omega^(C*i*r)
    shared = R == C
    tf_r_exp = (2 * C * np.outer(r, r)) % two_n

    # left[i_r, r] = omega^(C*brv(i_r)*r) * psi^(r*C)
    left_exp = (tf_r_exp[brv_r, :] + C * r[None, :]) % two_n
    # mid[i_r, c] = psi^(c*(2*brv(i_r) + 1))
    mid_exp = (np.outer(2 * brv_r + 1, c)) % two_n

    left = pw[left_exp]
    mid = pw[mid_exp]
    # right[c, i_c] = omega^(R*c*brv(i_c)); the inverse uses psi^-1 transposed
    right = step3_base_matrix(C, R, m, psi)[:, brv_c]
    right_inv = np.ascontiguousarray(step3_base_matrix(C, R, m, m.inverse(psi))[:, brv_c].T)
    mid_inv = pw[(-mid_exp) % two_n]
    n_inv = np.uint64(m.inverse(N))
    left_inv = (pw[(-left_exp.T) % two_n] * n_inv) % q

    domain = strategy.domain
    if domain is Domain.MONTGOMERY:
        mid_stored, mid_inv_stored = to_montgomery(mid, m), to_montgomery(mid_inv, m)
    else:
        mid_stored, mid_inv_stored = mid, mid_inv
    mid_shoup = mid_inv_shoup = None
    if strategy is ReductionStrategy.SHOUP:
        mid_shoup, mid_inv_shoup = shoup_precompute(mid, m), shoup_precompute(mid_inv, m)

    plan = NttPlan(
        N=N, R=R, C=C, modulus=m, psi=int(psi), bp=bp, strategy=strategy,
        left=offline_compile_left(left, m, bp, domain),
        mid=np.asarray(mid_stored, dtype=np.uint64),
        right=offline_compile_right(right, m, bp, domain),
        left_inv=offline_compile_left(left_inv, m, bp, domain),
        mid_inv=np.asarray(mid_inv_stored, dtype=np.uint64),
        right_inv=offline_compile_right(right_inv, m, bp, domain),
        mid_shoup=mid_shoup,
        mid_inv_shoup=mid_inv_shoup,
        meta={'shared_base': shared},
    )
    logger.debug(f"Compiled NTT plan N={N} R={R} C={C} q={m.q} strategy={strategy}")
    return plan


def _twiddle(Y: np.ndarray, mid: np.ndarray, shoup: Optional[np.ndarray], plan: NttPlan) -> np.ndarray:
    return vec_mod_elementwise(
        'mul', Y, mid, plan.modulus, plan.strategy,
        b_domain=plan.domain, b_shoup=shoup,
    )


def ntt3_layout_invariant(a, plan: NttPlan, ops: Optional[OpCount] = None,
                          pool: Optional['WorkerPool'] = None,
                          acc_hook: Optional[AccHook] = None) -> np.ndarray:
    """Forward 3-step NTT; input and output are both row-major R x C buffers

    ``acc_hook`` sees the step-1 accumulators of every vector.
    """
    a = _as_vectors(a, plan.modulus)
    if a.shape[-1] != plan.N:
        raise ShapeError(f"Input length {a.shape[-1]} does not match plan N={plan.N}")
    lead = a.shape[:-1]
    m, bp, strategy = plan.modulus, plan.bp, plan.strategy

    def one(vec: np.ndarray, count: Optional[OpCount]) -> np.ndarray:
        A = vec.reshape(plan.R, plan.C)
        Y = mat_mod_mul(None, A, m, bp, strategy, plan=plan.left, ops=count, acc_hook=acc_hook)
        Y = _twiddle(Y, plan.mid, plan.mid_shoup, plan)
        if count is not None:
            count.modmuls += plan.N
        return mat_mod_mul_right(Y, None, m, bp, strategy, plan=plan.right, ops=count).reshape(plan.N)

    return _run_batch(one, a, lead, pool, ops)


def intt3(a_hat, plan: NttPlan, ops: Optional[OpCount] = None,
          pool: Optional['WorkerPool'] = None,
          acc_hook: Optional[AccHook] = None) -> np.ndarray:
    """Inverse of ntt3_layout_invariant, consuming bit-reversed input"""
    a_hat = _as_vectors(a_hat, plan.modulus)
    if a_hat.shape[-1] != plan.N:
        raise ShapeError(f"Input length {a_hat.shape[-1]} does not match plan N={plan.N}")
    lead = a_hat.shape[:-1]
    m, bp, strategy = plan.modulus, plan.bp, plan.strategy

    def one(vec: np.ndarray, count: Optional[OpCount]) -> np.ndarray:
        Out = vec.reshape(plan.R, plan.C)
        Z = mat_mod_mul_right(Out, None, m, bp, strategy, plan=plan.right_inv, ops=count,
                              acc_hook=acc_hook)
        Z = _twiddle(Z, plan.mid_inv, plan.mid_inv_shoup, plan)
        if count is not None:
            count.modmuls += plan.N
        return mat_mod_mul(None, Z, m, bp, strategy, plan=plan.left_inv, ops=count).reshape(plan.N)

    return _run_batch(one, a_hat, lead, pool, ops)


def _run_batch(fn, a: np.ndarray, lead: tuple, pool: Optional['WorkerPool'],
               ops: Optional[OpCount]) -> np.ndarray:
    if not lead:
        return fn(a, ops)
    rows = list(a.reshape(-1, a.shape[-1]))
    if pool is not None and len(rows) > 1:
        counts = [OpCount() for _ in rows]
        results = pool.map(list(range(len(rows))), lambda k: fn(rows[k], counts[k]))
        if ops is not None:
            for count in counts:
                ops.merge(count)
    else:
        results = [fn(row, ops) for row in rows]
    return np.stack(results).reshape(lead + (a.shape[-1],))


# ---------------------------------------------------------------------------
# Polynomial arithmetic
# ---------------------------------------------------------------------------

def negacyclic_polymul(a, b, m: Modulus, plan: Optional[NttPlan] = None,
                       ops: Optional[OpCount] = None) -> np.ndarray:
    """a * b mod (X^N + 1, q) through forward transforms, pointwise product, inverse"""
    a = _as_vectors(a, m)
    b = _as_vectors(b, m)
    if a.shape != b.shape:
        raise ShapeError(f"Operand shapes differ: {a.shape} vs {b.shape}")
    if plan is None:
        N = a.shape[-1]
        plan = compile_ntt_plan(N, None, None, m)
    elif plan.modulus.q != m.q:
        raise ShapeError(f"Plan modulus {plan.modulus.q} does not match q={m.q}")
    a_hat = ntt3_layout_invariant(a, plan, ops)
    b_hat = ntt3_layout_invariant(b, plan, ops)
    prod = vec_mod_elementwise('mul', a_hat, b_hat, m, plan.strategy.reduce64_strategy)
    if ops is not None:
        ops.modmuls += int(prod.size)
    return intt3(prod, plan, ops)


def schoolbook_negacyclic(a, b, m: Modulus) -> np.ndarray:
    """c_k = sum_{i+j=k} a_i b_j - sum_{i+j=k+N} a_i b_j mod q"""
    a = _as_vectors(a, m)
    b = _as_vectors(b, m)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError(f"Expected two vectors of equal length, got {a.shape} and {b.shape}")
    N = a.size
    q = np.uint64(m.q)
    c = np.zeros(N, dtype=np.uint64)
    for i in range(N):
        prod = (a[i] * b) % q
        wrapped = (q - prod[N - i:]) % q
        c = (c + np.concatenate([wrapped, prod[:N - i]])) % q
    return c


def automorphism(a, k: int, m: Modulus) -> np.ndarray:
    """Coefficients of a(X^k) mod (X^N + 1) for odd k"""
    a = _as_vectors(a, m)
    N = a.shape[-1]
    _log2(N)
    if k % 2 == 0:
        raise ParameterRangeError(f"Automorphism index {k} must be odd")
    t = (np.arange(N, dtype=np.int64) * (k % (2 * N))) % (2 * N)
    dest = t % N
    negate = t >= N
    q = np.uint64(m.q)
    values = np.where(negate, (q - a) % q, a)
    out = np.zeros_like(a)
    out[..., dest] = values
    return out


def ntt_complexity(N: int, R: int, C: int) -> Tuple[int, int]:
    """(modmuls of ntt3, modmuls of ct_ntt) for one transform"""
    return N * (R + C) + N, (N // 2) * int(math.log2(N)) if N > 1 else 0
