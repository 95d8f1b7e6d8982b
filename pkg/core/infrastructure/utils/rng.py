"""Seeded input streams

Inputs come from a counter-based Philox generator so the same seed yields
the same data on every platform. Each named stream gets its own key.
"""

import hashlib
from typing import Sequence

import numpy as np

from core.infrastructure.config.constants import PRNG_ID


def make_rng(seed: int, stream: str = '') -> np.random.Generator:
    """Philox generator keyed by (seed, stream)"""
    if stream:
        digest = hashlib.sha256(f"{seed}:{stream}".encode()).digest()
        key = int.from_bytes(digest[:16], 'little')
    else:
        key = int(seed) & ((1 << 128) - 1)
    return np.random.Generator(np.random.Philox(key=key))


def random_residues(rng: np.random.Generator, q: int, shape) -> np.ndarray:
    """Uniform residues in [0, q) as uint64"""
    return rng.integers(0, q, size=shape, dtype=np.uint64)


def random_limbs(rng: np.random.Generator, moduli: Sequence[int], N: int) -> np.ndarray:
    """L x N matrix with row i uniform in [0, q_i)"""
    return np.stack([random_residues(rng, q, N) for q in moduli]) if moduli else \
        np.zeros((0, N), dtype=np.uint64)


def prng_id() -> str:
    return PRNG_ID
