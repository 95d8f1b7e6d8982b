"""Domain entities for low-precision accumulators and operation counts"""

from dataclasses import dataclass, field, asdict
from typing import Dict, Any, Tuple

import numpy as np

from ..exceptions import PrecisionError

MXU_TILE = 128


def pad_to(n: int, tile: int = MXU_TILE) -> int:
    """Round n up to a multiple of tile"""
    return -(-n // tile) * tile


@dataclass
class OpCount:
    """Countable cost of one kernel call

    ``multiplies`` counts bp-bit multiply-accumulates issued to the matrix
    engine, ``modmuls`` counts word-level modular multiplications (one per
    high-precision product, whichever engine executes it).
    """

    multiplies: int = 0
    bytes_lhs: int = 0
    modmuls: int = 0
    perm_ops: int = 0
    shift_adds: int = 0
    padded_macs: int = 0

    def add_matmul(self, rows: int, inner: int, cols: int, lhs_bytes_per_entry: int = 1) -> None:
        """Account a dense (rows x inner) @ (inner x cols) product"""
        self.multiplies += rows * inner * cols
        self.bytes_lhs += rows * inner * lhs_bytes_per_entry
        self.padded_macs += pad_to(rows) * pad_to(inner) * pad_to(cols)

    def merge(self, other: 'OpCount') -> 'OpCount':
        """Accumulate another count into this one"""
        self.multiplies += other.multiplies
        self.bytes_lhs += other.bytes_lhs
        self.modmuls += other.modmuls
        self.perm_ops += other.perm_ops
        self.shift_adds += other.shift_adds
        self.padded_macs += other.padded_macs
        return self

    @property
    def mxu_utilization(self) -> float:
        """Useful MACs over MACs issued when every dimension is padded to 128"""
        return self.multiplies / self.padded_macs if self.padded_macs else 0.0

    def to_dict(self) -> Dict[str, Any]:
        """Convert counts to dictionary"""
        return asdict(self)


@dataclass(frozen=True, eq=False)
class AccMatrix:
    """H x W unsigned 32-bit accumulators from a low-precision matmul"""

    data: np.ndarray
    K: int
    V: int
    bp: int = 8
    max_entry: int = field(default=0)

    def __post_init__(self):
        """Validate accumulator width"""
        if self.data.dtype != np.uint32:
            raise PrecisionError(f"Accumulators must be uint32, got {self.data.dtype}")

    @property
    def bound_bits(self) -> int:
        """2bp + ceil(log2(K*V)) accumulator bound"""
        return 2 * self.bp + max(self.K * self.V - 1, 0).bit_length()

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    def within_bound(self) -> bool:
        """Every entry is below 2^bound_bits"""
        return self.max_entry < (1 << self.bound_bits)
