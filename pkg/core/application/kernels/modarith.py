"""Word-level modular arithmetic: moduli, reduction strategies and chunking

Every routine works on Python ints or numpy arrays. Arrays are processed as
``uint64``; results come back as ``uint64`` arrays, scalars as ``int``.
"""

import logging
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.domain.entities.chunk_tensor import ChunkTensor
from core.domain.entities.modulus import Modulus, MASK16, MASK32
from core.domain.entities.reduction_strategy import Domain, ReductionStrategy
from core.domain.exceptions import (
    ParameterRangeError,
    PrecisionError,
    PrimalityError,
    PrimeExhaustionError,
    RootOfUnityError,
    ShapeError,
    UsageError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[int, Sequence[int], np.ndarray]

U16 = np.uint64(16)
U32 = np.uint64(32)
M16 = np.uint64(MASK16)
M32 = np.uint64(MASK32)

# Deterministic for every n < 3.3 * 10^24
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def as_u64(x: ArrayLike) -> Tuple[np.ndarray, bool]:
    """View input as a uint64 array, remembering whether it was a scalar"""
    scalar = np.isscalar(x) or (isinstance(x, np.ndarray) and x.ndim == 0)
    return np.asarray(x, dtype=np.uint64), scalar


def unwrap(arr: np.ndarray, scalar: bool):
    return int(arr) if scalar else arr


# ---------------------------------------------------------------------------
# Number theory
# ---------------------------------------------------------------------------

def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for 64-bit inputs"""
    n = int(n)
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_factors(n: int) -> List[int]:
    """Distinct prime factors of n by trial division"""
    factors = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        factors.append(n)
    return factors


def make_modulus(q: int) -> Modulus:
    """Build a Modulus with all Barrett, Montgomery and Shoup constants"""
    q = int(q)
    if q >= (1 << 31):
        raise ParameterRangeError(f"Modulus {q} must be below 2^31")
    if q <= 2:
        raise ParameterRangeError(f"Modulus {q} must be above 2")
    if not is_prime(q):
        raise PrimalityError(f"Modulus {q} is not prime (Miller-Rabin witness found)")

    log2q = q.bit_length()
    s = 2 * log2q
    return Modulus(
        q=q,
        log2q=log2q,
        barrett_s=s,
        barrett_m=(1 << s) // q,
        mont_qinv=pow(q, -1, 1 << 32),
        mont_r2=pow(2, 64, q),
        q_lo=q & MASK16,
        q_hi=q >> 16,
        mont_r=pow(2, 32, q),
        barrett64_m=(1 << 64) // q,
    )


def gen_ntt_prime(bits: int, N: int, exclude: Iterable[int] = ()) -> int:
    """Largest `bits`-bit prime q with q = 1 (mod 2N), skipping `exclude`"""
    return gen_ntt_primes(bits, N, 1, exclude)[0]


def gen_ntt_primes(bits: int, N: int, count: int, exclude: Iterable[int] = ()) -> List[int]:
    """`count` distinct `bits`-bit NTT-friendly primes, scanning downward"""
    if not 2 <= bits <= 31:
        raise ParameterRangeError(f"Prime width {bits} outside [2, 31]")
    if N < 1 or N & (N - 1):
        raise ParameterRangeError(f"Degree N={N} is not a power of two")

    step = 2 * N
    lower = 1 << (bits - 1)
    skip = set(int(e) for e in exclude)
    # Largest candidate below 2^bits that is 1 mod 2N
    candidate = ((1 << bits) - 2) // step * step + 1

    primes = []
    while candidate >= lower and len(primes) < count:
        if candidate > 2 and candidate not in skip and is_prime(candidate):
            primes.append(candidate)
        candidate -= step

    if len(primes) < count:
        raise PrimeExhaustionError(
            f"Only {len(primes)} of {count} {bits}-bit primes = 1 mod {step} exist"
        )
    logger.debug(f"Generated {count} NTT primes of {bits} bits for N={N}")
    return primes


def find_primitive_root(modulus: Modulus, order: int) -> int:
    """A primitive `order`-th root of unity mod q"""
    q = modulus.q
    order = int(order)
    if order < 1 or (q - 1) % order:
        raise RootOfUnityError(f"Order {order} does not divide q-1={q - 1}")
    if order == 1:
        return 1

    order_factors = prime_factors(order)
    cofactor = (q - 1) // order
    for g in range(2, q):
        w = pow(g, cofactor, q)
        if all(pow(w, order // p, q) != 1 for p in order_factors):
            return w
    raise RootOfUnityError(f"No primitive {order}-th root found mod {q}")


def is_primitive_root(w: int, order: int, modulus: Modulus) -> bool:
    """Whether w has multiplicative order exactly `order`"""
    q = modulus.q
    if pow(int(w), order, q) != 1:
        return False
    return all(pow(int(w), order // p, q) != 1 for p in prime_factors(order))


# ---------------------------------------------------------------------------
# Reduction primitives
# ---------------------------------------------------------------------------

def mulhi64(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """floor(x*y / 2^64) from four 32x32 partial products"""
    x0, x1 = x & M32, x >> U32
    y0, y1 = y & M32, y >> U32
    p00 = x0 * y0
    p01 = x0 * y1
    p10 = x1 * y0
    p11 = x1 * y1
    mid = (p00 >> U32) + (p01 & M32) + (p10 & M32)
    return p11 + (p01 >> U32) + (p10 >> U32) + (mid >> U32)


def _check_residues(m: Modulus, *arrays: np.ndarray) -> None:
    for arr in arrays:
        if arr.size and int(arr.max()) >= m.q:
            raise ParameterRangeError(f"Input {int(arr.max())} is not a residue mod {m.q}")


def _barrett_quotient(z: np.ndarray, m: Modulus) -> np.ndarray:
    """t = (z * m) >> s for z < 2^62 without 128-bit arithmetic"""
    bm = np.uint64(m.barrett_m)
    s = m.barrett_s
    if s < 32:
        return (z * bm) >> np.uint64(s)
    hi, lo = z >> U32, z & M32
    return (hi * bm + ((lo * bm) >> U32)) >> np.uint64(s - 32)


def barrett_mulmod(a: ArrayLike, b: ArrayLike, m: Modulus):
    """(a*b) mod q with Barrett's quotient estimate and one correction"""
    a_arr, a_scalar = as_u64(a)
    b_arr, b_scalar = as_u64(b)
    _check_residues(m, a_arr, b_arr)

    return unwrap(barrett_reduce(a_arr * b_arr, m), a_scalar and b_scalar)


def barrett_reduce(z: ArrayLike, m: Modulus):
    """z mod q for a double-width product z < q^2"""
    z_arr, scalar = as_u64(z)
    q = np.uint64(m.q)
    t = _barrett_quotient(z_arr, m)
    r = z_arr - t * q
    return unwrap(np.where(r >= q, r - q, r), scalar)


def barrett_reduce64(z: ArrayLike, m: Modulus):
    """z mod q for any z < 2^64 using floor(2^64/q)"""
    z_arr, scalar = as_u64(z)
    q = np.uint64(m.q)
    t = mulhi64(z_arr, np.uint64(m.barrett64_m))
    r = z_arr - t * q
    r = np.where(r >= q, r - q, r)
    return unwrap(r, scalar)


def montgomery_reduce64(z: ArrayLike, m: Modulus):
    """B = z * 2^-32 (mod q) with B in [0, 2q)

    The upper half of t*q is assembled from four 16x16-bit products so every
    intermediate fits in 32 bits. A high word at or above q is first reduced
    mod q, which extends the usual z < q*2^32 precondition to all of [0, 2^64).
    """
    z_arr, scalar = as_u64(z)
    q = np.uint64(m.q)

    z_lo = z_arr & M32
    z_hi = z_arr >> U32
    z_hi = np.where(z_hi >= q, z_hi % q, z_hi)

    t = (z_lo * np.uint64(m.mont_qinv)) & M32
    t_lo, t_hi = t & M16, t >> U16
    q_lo, q_hi = np.uint64(m.q_lo), np.uint64(m.q_hi)

    p_hi = t_hi * q_hi
    p_lo = t_lo * q_lo
    p_m_hi = t_hi * q_lo
    p_m_lo = t_lo * q_hi
    mid_lo = (p_m_hi & M16) + (p_m_lo & M16) + (p_lo >> U16)
    mid_hi = (p_m_hi >> U16) + (p_m_lo >> U16) + (mid_lo >> U16)
    t_final = p_hi + mid_hi

    b = (z_hi + q - t_final) & M32
    return unwrap(b, scalar)


def to_montgomery(a: ArrayLike, m: Modulus):
    """a * 2^32 mod q"""
    a_arr, scalar = as_u64(a)
    out = montgomery_reduce64(a_arr * np.uint64(m.mont_r2), m)
    q = np.uint64(m.q)
    return unwrap(np.where(out >= q, out - q, out), scalar)


def from_montgomery(a: ArrayLike, m: Modulus):
    """a * 2^-32 mod q"""
    a_arr, scalar = as_u64(a)
    out = montgomery_reduce64(a_arr, m)
    q = np.uint64(m.q)
    return unwrap(np.where(out >= q, out - q, out), scalar)


def montgomery_mulmod(a: ArrayLike, b_mont: ArrayLike, m: Modulus):
    """(a*b) mod q where b_mont = b * 2^32 mod q"""
    a_arr, a_scalar = as_u64(a)
    b_arr, b_scalar = as_u64(b_mont)
    out = montgomery_reduce64(a_arr * b_arr, m)
    q = np.uint64(m.q)
    return unwrap(np.where(out >= q, out - q, out), a_scalar and b_scalar)


def shoup_precompute(b: ArrayLike, m: Modulus):
    """floor(b * 2^32 / q) for a fixed multiplicand b"""
    b_arr, scalar = as_u64(b)
    _check_residues(m, b_arr)
    return unwrap((b_arr << U32) // np.uint64(m.q), scalar)


def shoup_mulmod(a: ArrayLike, b: ArrayLike, b_shoup: ArrayLike, m: Modulus):
    """(a*b) mod q from one high-half multiply, one low multiply and one correction"""
    a_arr, a_scalar = as_u64(a)
    b_arr, b_scalar = as_u64(b)
    bs_arr, _ = as_u64(b_shoup)
    _check_residues(m, a_arr, b_arr)

    q = np.uint64(m.q)
    t = (a_arr * bs_arr) >> U32
    r = (a_arr * b_arr - t * q) & M32
    r = np.where(r >= q, r - q, r)
    return unwrap(r, a_scalar and b_scalar)


def reduce64(z: ArrayLike, m: Modulus, strategy: ReductionStrategy = ReductionStrategy.NATIVE):
    """Reduce a 64-bit value with the selected strategy

    Montgomery returns the canonical z * 2^-32 mod q; callers compile their
    constants in the Montgomery domain to cancel the factor.
    """
    z_arr, scalar = as_u64(z)
    strategy = strategy.reduce64_strategy
    if strategy is ReductionStrategy.NATIVE:
        out = z_arr % np.uint64(m.q)
    elif strategy is ReductionStrategy.BARRETT64:
        out = barrett_reduce64(z_arr, m)
    elif strategy is ReductionStrategy.MONTGOMERY:
        out = from_montgomery(z_arr, m)
    else:
        raise UsageError(f"Unsupported reduction strategy {strategy}")
    return unwrap(np.asarray(out, dtype=np.uint64), scalar)


def mulmod(a: ArrayLike, b: ArrayLike, m: Modulus,
           strategy: ReductionStrategy = ReductionStrategy.NATIVE):
    """(a*b) mod q for plain-domain operands under any strategy"""
    if strategy is ReductionStrategy.NATIVE:
        a_arr, a_scalar = as_u64(a)
        b_arr, b_scalar = as_u64(b)
        return unwrap((a_arr * b_arr) % np.uint64(m.q), a_scalar and b_scalar)
    if strategy is ReductionStrategy.BARRETT64:
        return barrett_mulmod(a, b, m)
    if strategy is ReductionStrategy.MONTGOMERY:
        return montgomery_mulmod(a, to_montgomery(b, m), m)
    if strategy is ReductionStrategy.SHOUP:
        return shoup_mulmod(a, b, shoup_precompute(b, m), m)
    raise UsageError(f"Unsupported reduction strategy {strategy}")


def vec_mod_elementwise(op: str, a: ArrayLike, b: ArrayLike, m: Modulus,
                        strategy: ReductionStrategy = ReductionStrategy.BARRETT64,
                        b_domain: Domain = Domain.PLAIN,
                        b_shoup: Optional[np.ndarray] = None) -> np.ndarray:
    """Elementwise add / sub / mul mod q

    For ``mul`` a precompiled right operand may be passed: in Montgomery form
    (``b_domain=Domain.MONTGOMERY``) or with its Shoup constants.
    """
    a_arr = np.asarray(a, dtype=np.uint64)
    b_arr = np.asarray(b, dtype=np.uint64)
    if a_arr.shape != b_arr.shape:
        raise ShapeError(f"Operand shapes differ: {a_arr.shape} vs {b_arr.shape}")
    q = np.uint64(m.q)

    if op == 'add':
        _check_residues(m, a_arr, b_arr)
        s = a_arr + b_arr
        return np.where(s >= q, s - q, s)
    if op == 'sub':
        _check_residues(m, a_arr, b_arr)
        return np.where(a_arr >= b_arr, a_arr - b_arr, a_arr + q - b_arr)
    if op != 'mul':
        raise UsageError(f"Unknown elementwise op {op!r}")

    if b_domain is Domain.MONTGOMERY:
        return montgomery_mulmod(a_arr, b_arr, m)
    if strategy is ReductionStrategy.SHOUP and b_shoup is not None:
        return shoup_mulmod(a_arr, b_arr, b_shoup, m)
    return mulmod(a_arr, b_arr, m, strategy)


# ---------------------------------------------------------------------------
# Chunking
# ---------------------------------------------------------------------------

def chunk_decompose(a: ArrayLike, K: int, bp: int = 8) -> ChunkTensor:
    """Split values into K bp-bit chunks, least significant first"""
    a_arr = np.asarray(a, dtype=np.uint64)
    if K * bp > 64:
        raise ParameterRangeError(f"{K} chunks of {bp} bits exceed a 64-bit word")
    if K * bp < 64 and a_arr.size and int(a_arr.max()) >= (1 << (K * bp)):
        raise ParameterRangeError(
            f"Value {int(a_arr.max())} exceeds {K} chunks of {bp} bits"
        )
    mask = np.uint64((1 << bp) - 1)
    shifts = np.arange(K, dtype=np.uint64) * np.uint64(bp)
    data = (a_arr[..., None] >> shifts) & mask
    return ChunkTensor(data=data, bp=bp)


def merge_bound(data: np.ndarray, bp: int) -> int:
    """Upper bound on merged values from the per-chunk maxima"""
    K = data.shape[-1]
    maxima = data.reshape(-1, K).max(axis=0) if data.size else np.zeros(K, dtype=np.uint64)
    return sum(int(v) << (k * bp) for k, v in enumerate(maxima))


def _check_merge_exact(data: np.ndarray, bp: int) -> None:
    exact = np.zeros(data.shape[:-1], dtype=object)
    for k in range(data.shape[-1]):
        exact = exact + (data[..., k].astype(object) << (k * bp))
    if np.any(exact >= (1 << 64)):
        raise PrecisionError("Merged value does not fit in 64 bits")


def chunk_merge(chunks: Union[ChunkTensor, np.ndarray], bp: Optional[int] = None,
                bound: Optional[int] = None):
    """Sum_k chunks[..., k] << k*bp, exact in 64 bits

    Raw arrays may carry chunks wider than bp (accumulator rows). A caller
    that knows its merged values stay below ``bound`` skips the column
    estimate; the per-element check runs only when the bound reaches 2^64.
    """
    if isinstance(chunks, ChunkTensor):
        data, bp = np.asarray(chunks.data, dtype=np.uint64), chunks.bp
    else:
        if bp is None:
            raise UsageError("chunk_merge on a raw array needs bp")
        data = np.asarray(chunks, dtype=np.uint64)

    if bound is None:
        bound = merge_bound(data, bp)
    if bound >= (1 << 64):
        _check_merge_exact(data, bp)

    out = np.zeros(data.shape[:-1], dtype=np.uint64)
    for k in range(data.shape[-1]):
        out += data[..., k] << np.uint64(k * bp)
    return int(out) if out.ndim == 0 else out
