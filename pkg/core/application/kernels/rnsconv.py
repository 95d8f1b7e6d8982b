"""RNS layer: CRT, fast basis conversion, rescale and limb-wise HE kernels

Limbs are independent, so every limb loop can fan out over a WorkerPool.
"""

import logging
from typing import List, Optional, Sequence, Tuple, TYPE_CHECKING

import numpy as np

from core.application.kernels.bat import offline_compile_left
from core.application.kernels.lpmm import mat_mod_mul
from core.application.kernels.modarith import make_modulus, mulmod, vec_mod_elementwise, gen_ntt_primes
from core.application.kernels.nttmat import automorphism, intt3, ntt3_layout_invariant
from core.domain.entities.bat_matrices import BatMatPlan
from core.domain.entities.ntt_plan import NttPlan
from core.domain.entities.op_count import OpCount
from core.domain.entities.reduction_strategy import ReductionStrategy
from core.domain.entities.rns import RnsBasis, RnsPoly
from core.domain.exceptions import ConfigurationError, ParameterRangeError, ShapeError

if TYPE_CHECKING:
    from core.infrastructure.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

Ciphertext = Tuple[RnsPoly, RnsPoly]


def _map_limbs(fn, items: Sequence, pool: Optional['WorkerPool'],
               ops: Optional[OpCount] = None) -> List:
    """Run fn(item, ops) per limb; each task counts into its own OpCount"""
    if pool is None or len(items) <= 1:
        return [fn(item, ops) for item in items]
    if ops is None:
        return pool.map(items, lambda item: fn(item, None))
    counts = [OpCount() for _ in items]
    results = pool.map(list(range(len(items))), lambda k: fn(items[k], counts[k]))
    for count in counts:
        ops.merge(count)
    return results


def make_basis(bits: int, N: int, count: int, exclude: Sequence[int] = ()) -> RnsBasis:
    """Basis of `count` NTT-friendly primes of `bits` bits"""
    primes = gen_ntt_primes(bits, N, count, exclude)
    return RnsBasis(tuple(make_modulus(q) for q in primes))


# ---------------------------------------------------------------------------
# CRT
# ---------------------------------------------------------------------------

def crt_decompose(coeffs, basis: RnsBasis) -> RnsPoly:
    """Limb i = coeffs mod q_i"""
    values = np.asarray(coeffs, dtype=object).ravel()
    for v in values:
        if not 0 <= int(v) < basis.Q:
            raise ParameterRangeError(f"Coefficient {v} outside [0, Q)")
    limbs = np.array(
        [[int(v) % q for v in values] for q in basis.q_values],
        dtype=np.uint64,
    ).reshape(basis.L, values.size)
    return RnsPoly(limbs=limbs, basis=basis)


def crt_recompose(p: RnsPoly) -> np.ndarray:
    """Unique representatives in [0, Q) as big integers"""
    basis = p.basis
    total = np.zeros(p.N, dtype=object)
    for i, q in enumerate(basis.q_values):
        scaled = (p.limbs[i].astype(object) * int(basis.qhat_inv[i])) % q
        total = total + scaled * basis.qhat[i]
    return total % basis.Q


# ---------------------------------------------------------------------------
# Basis conversion
# ---------------------------------------------------------------------------

def bconv_step1(p: RnsPoly, strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                ops: Optional[OpCount] = None,
                pool: Optional['WorkerPool'] = None) -> np.ndarray:
    """b[i, n] = a[i, n] * qhat_inv[i] mod q_i"""
    basis = p.basis
    vec_strategy = strategy.reduce64_strategy

    def one(i: int, count: Optional[OpCount]) -> np.ndarray:
        m = basis.moduli[i]
        scale = np.full(p.N, basis.qhat_inv[i], dtype=np.uint64)
        if count is not None:
            count.modmuls += p.N
        return vec_mod_elementwise('mul', p.limbs[i], scale, m, vec_strategy)

    rows = _map_limbs(one, list(range(basis.L)), pool, ops)
    return np.stack(rows).astype(np.uint64)


def compile_bconv_plans(source: RnsBasis, target: RnsBasis, bp: int = 8,
                        strategy: ReductionStrategy = ReductionStrategy.BARRETT64) -> List[BatMatPlan]:
    """One 1 x L left plan per target modulus: row j of the cross table"""
    table = source.cross_table(target)
    return [
        offline_compile_left(table[:, j][None, :], p, bp, strategy.domain)
        for j, p in enumerate(target.moduli)
    ]


def bconv_step2(b: np.ndarray, source: RnsBasis, target: RnsBasis,
                strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                use_bat: bool = True, bp: int = 8,
                plans: Optional[List[BatMatPlan]] = None,
                ops: Optional[OpCount] = None,
                pool: Optional['WorkerPool'] = None) -> np.ndarray:
    """c[j, n] = sum_i b[i, n] * (Q / q_i) mod p_j

    With ``use_bat`` each target modulus runs one low-precision matmul of
    its compiled cross-table row by the L x N input.
    """
    b = np.asarray(b, dtype=np.uint64)
    if b.ndim != 2 or b.shape[0] != source.L:
        raise ShapeError(f"Step-1 output of shape {b.shape} does not fit {source.L} source limbs")
    if use_bat and plans is None:
        plans = compile_bconv_plans(source, target, bp, strategy)
    if use_bat and len(plans) != target.L:
        raise ConfigurationError(f"{len(plans)} plans prepared for {target.L} target moduli")
    table = source.cross_table(target)
    N = b.shape[1]
    max_q = max(source.q_values)

    def one(j: int, count: Optional[OpCount]) -> np.ndarray:
        m = target.moduli[j]
        p = np.uint64(m.q)
        b_j = b % p if max_q > m.q else b
        if use_bat:
            return mat_mod_mul(None, b_j, m, bp, strategy, plan=plans[j], ops=count)[0]
        acc = np.zeros(N, dtype=np.uint64)
        for i in range(source.L):
            term = np.asarray(mulmod(b_j[i], np.full(N, table[i, j], dtype=np.uint64), m,
                                     strategy.reduce64_strategy), dtype=np.uint64)
            acc = acc + term
            acc = np.where(acc >= p, acc - p, acc)
        if count is not None:
            count.modmuls += source.L * N
        return acc

    rows = _map_limbs(one, list(range(target.L)), pool, ops)
    return np.stack(rows).astype(np.uint64)


def bconv(p: RnsPoly, target: RnsBasis,
          strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
          use_bat: bool = True, bp: int = 8,
          plans: Optional[List[BatMatPlan]] = None,
          ops: Optional[OpCount] = None,
          pool: Optional['WorkerPool'] = None) -> RnsPoly:
    """Fast basis conversion; exact to the formula, off by e*Q with 0 <= e < L"""
    if p.basis.overlaps(target):
        raise ConfigurationError("Source and target bases share a modulus")
    b = bconv_step1(p, strategy, ops, pool)
    c = bconv_step2(b, p.basis, target, strategy, use_bat, bp, plans, ops, pool)
    return RnsPoly(limbs=c, basis=target)


def bconv_oracle(p: RnsPoly, target: RnsBasis) -> Tuple[np.ndarray, np.ndarray]:
    """Big-integer evaluation of the conversion formula and the slack e per coefficient

    Returns (L' x N residues, e) with sum_i [a_i qhat_inv_i]_{q_i} (Q/q_i) = x + e*Q.
    """
    basis = p.basis
    total = np.zeros(p.N, dtype=object)
    for i, q in enumerate(basis.q_values):
        scaled = (p.limbs[i].astype(object) * int(basis.qhat_inv[i])) % q
        total = total + scaled * basis.qhat[i]
    x = total % basis.Q
    e = (total - x) // basis.Q
    limbs = np.array([[int(v) % pj for v in total] for pj in target.q_values], dtype=np.uint64)
    return limbs.reshape(target.L, p.N), e


# ---------------------------------------------------------------------------
# Rescale and limb-wise HE kernels
# ---------------------------------------------------------------------------

def rescale(p: RnsPoly, count: int = 1,
            strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
            ops: Optional[OpCount] = None) -> RnsPoly:
    """Divide by the last modulus and drop it; ``count=2`` drops two"""
    if count < 1:
        raise ParameterRangeError(f"Rescale count {count} must be >= 1")
    vec_strategy = strategy.reduce64_strategy
    for _ in range(count):
        basis = p.basis
        if basis.L < 2:
            raise ParameterRangeError("Cannot rescale a single-limb polynomial")
        last = basis.moduli[-1]
        c_l = p.limbs[-1]
        rows = []
        for i, m in enumerate(basis.moduli[:-1]):
            q = np.uint64(m.q)
            c_l_i = c_l % q
            diff = np.where(p.limbs[i] >= c_l_i, p.limbs[i] - c_l_i, p.limbs[i] + q - c_l_i)
            inv = np.full(p.N, m.inverse(last.q), dtype=np.uint64)
            rows.append(vec_mod_elementwise('mul', diff, inv, m, vec_strategy))
        if ops is not None:
            ops.modmuls += (basis.L - 1) * p.N
        p = RnsPoly(limbs=np.stack(rows).astype(np.uint64), basis=basis.drop_last())
    return p


def rescale_oracle(values, basis: RnsBasis, count: int = 1) -> np.ndarray:
    """Big-integer reference: repeated (x - [x]_{q_l}) / q_l"""
    xs = np.asarray(values, dtype=object)
    for _ in range(count):
        q_l = basis.q_values[-1]
        xs = (xs - xs % q_l) // q_l
        basis = basis.drop_last()
    return xs % basis.Q


def _check_same(a: RnsPoly, b: RnsPoly) -> None:
    if a.basis != b.basis:
        raise ConfigurationError("Operands live in different RNS bases")
    if a.N != b.N:
        raise ShapeError(f"Degrees differ: {a.N} vs {b.N}")


def _limbwise(op: str, a: RnsPoly, b: RnsPoly, strategy: ReductionStrategy) -> RnsPoly:
    _check_same(a, b)
    rows = [
        vec_mod_elementwise(op, a.limbs[i], b.limbs[i], m, strategy.reduce64_strategy)
        for i, m in enumerate(a.basis.moduli)
    ]
    return RnsPoly(limbs=np.stack(rows).astype(np.uint64), basis=a.basis)


def he_add(a: RnsPoly, b: RnsPoly) -> RnsPoly:
    """Limb-wise (a + b) mod q_i"""
    return _limbwise('add', a, b, ReductionStrategy.BARRETT64)


def he_mult_tensor(c: Ciphertext, d: Ciphertext,
                   strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                   ops: Optional[OpCount] = None) -> Tuple[RnsPoly, RnsPoly, RnsPoly]:
    """(c0 d0, c0 d1 + c1 d0, c1 d1) on evaluation-form limbs, no relinearisation"""
    c0, c1 = c
    d0, d1 = d
    e0 = _limbwise('mul', c0, d0, strategy)
    e1 = _limbwise('add', _limbwise('mul', c0, d1, strategy), _limbwise('mul', c1, d0, strategy), strategy)
    e2 = _limbwise('mul', c1, d1, strategy)
    if ops is not None:
        ops.modmuls += 4 * c0.L * c0.N
    return e0, e1, e2


def he_rotate_nokey(ct: Ciphertext, k: int) -> Ciphertext:
    """Apply X -> X^k to every limb of both coefficient-form parts"""
    def rotate(p: RnsPoly) -> RnsPoly:
        rows = [automorphism(p.limbs[i], k, m) for i, m in enumerate(p.basis.moduli)]
        return RnsPoly(limbs=np.stack(rows).astype(np.uint64), basis=p.basis)
    return rotate(ct[0]), rotate(ct[1])


# ---------------------------------------------------------------------------
# Limb-wise NTT
# ---------------------------------------------------------------------------

def _check_plans(p: RnsPoly, plans: Sequence[NttPlan]) -> None:
    if len(plans) != p.L:
        raise ConfigurationError(f"{len(plans)} NTT plans for {p.L} limbs")
    for plan, q in zip(plans, p.basis.q_values):
        if plan.modulus.q != q or plan.N != p.N:
            raise ConfigurationError(f"NTT plan (q={plan.modulus.q}, N={plan.N}) does not match limb q={q}")


def rns_ntt(p: RnsPoly, plans: Sequence[NttPlan], ops: Optional[OpCount] = None,
            pool: Optional['WorkerPool'] = None) -> RnsPoly:
    """Forward 3-step NTT of every limb with its own plan"""
    _check_plans(p, plans)
    rows = _map_limbs(lambda i, count: ntt3_layout_invariant(p.limbs[i], plans[i], count),
                      list(range(p.L)), pool, ops)
    return RnsPoly(limbs=np.stack(rows).astype(np.uint64), basis=p.basis)


def rns_intt(p: RnsPoly, plans: Sequence[NttPlan], ops: Optional[OpCount] = None,
             pool: Optional['WorkerPool'] = None) -> RnsPoly:
    """Inverse of rns_ntt"""
    _check_plans(p, plans)
    rows = _map_limbs(lambda i, count: intt3(p.limbs[i], plans[i], count),
                      list(range(p.L)), pool, ops)
    return RnsPoly(limbs=np.stack(rows).astype(np.uint64), basis=p.basis)
