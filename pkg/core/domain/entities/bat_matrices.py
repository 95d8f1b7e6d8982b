"""Domain entities produced by the basis-aligned transformation compiler"""

import struct
from dataclasses import dataclass, field
from typing import Callable, Dict, Any, Optional

import numpy as np

from .modulus import Modulus
from .reduction_strategy import Domain
from ..exceptions import ParameterRangeError, SerializationError, ShapeError

BATP_MAGIC = b'BATP'
BATP_VERSION = 1
# magic, version, domain, side, bp, K, chunk bytes, reserved, q, H, V, rows, cols
_BATP_HEADER = struct.Struct('<4sHBBBBBBIIIII')

SIDE_LEFT = 0
SIDE_RIGHT = 1


@dataclass(frozen=True, eq=False)
class ToeplitzMatrix:
    """(2K-1) x K chunk matrix; column j merges to a * 2^(j*bp)

    Entries may exceed 2^bp while folding and carrying are in progress.
    """

    data: np.ndarray
    K: int
    bp: int = 8

    def __post_init__(self):
        """Validate shape"""
        if self.data.shape != (2 * self.K - 1, self.K):
            raise ShapeError(
                f"Toeplitz data has shape {self.data.shape}, expected {(2 * self.K - 1, self.K)}"
            )

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.K

    @property
    def top_block(self) -> np.ndarray:
        """Rows 0..K-1 (output bases below 2^(K*bp))"""
        return self.data[:self.K]

    @property
    def bottom_block(self) -> np.ndarray:
        """Rows K..2K-2 (output bases that must be folded)"""
        return self.data[self.K:]

    @property
    def zero_fraction(self) -> float:
        """Share of zero entries"""
        return float(np.count_nonzero(self.data == 0)) / self.data.size

    def fits(self) -> bool:
        """Whether every entry fits in bp bits"""
        return bool(np.all(self.data < (1 << self.bp)))

    def column_merge(self) -> list:
        """Exact merged value of every column (big integers)"""
        return [
            sum(int(self.data[r, j]) << (r * self.bp) for r in range(self.rows))
            for j in range(self.K)
        ]


@dataclass(frozen=True, eq=False)
class BatScalarMatrix:
    """Dense K x K bp-bit matrix for multiplying by a known residue"""

    matrix: np.ndarray
    a: int
    modulus: Modulus
    bp: int = 8
    domain: Domain = Domain.PLAIN

    def __post_init__(self):
        """Validate the dense matrix"""
        K = self.matrix.shape[0]
        if self.matrix.shape != (K, K):
            raise ShapeError(f"BAT scalar matrix must be square, got {self.matrix.shape}")
        if self.matrix.size and int(self.matrix.max()) >= (1 << self.bp):
            raise ParameterRangeError(f"BAT entry {int(self.matrix.max())} exceeds {self.bp} bits")

    @property
    def K(self) -> int:
        return self.matrix.shape[0]

    @property
    def effective_a(self) -> int:
        """The multiplicand the columns actually encode"""
        if self.domain is Domain.MONTGOMERY:
            return self.a * self.modulus.mont_r % self.modulus.q
        return self.a

    def column_values(self) -> list:
        """Merged value of every column"""
        return [
            sum(int(self.matrix[i, j]) << (i * self.bp) for i in range(self.K))
            for j in range(self.K)
        ]

    def is_congruent(self) -> bool:
        """Every column j merges to effective_a * 2^(j*bp) mod q"""
        q = self.modulus.q
        return all(
            (v - self.effective_a * (1 << (j * self.bp))) % q == 0
            for j, v in enumerate(self.column_values())
        )


@dataclass(frozen=True, eq=False)
class BatMatPlan:
    """Offline-compiled dense chunk matrix for a known matrix operand

    A left plan compiles A (H x V) into KH x KV, block (h, v) being the scalar
    BAT matrix of A[h, v]. A right plan compiles B (H x V, used as the right
    factor) into KH x KV with transposed blocks so that runtime chunks laid
    out along rows multiply it directly.
    """

    A_dense: np.ndarray
    H: int
    V: int
    K: int
    bp: int
    modulus: Modulus
    domain: Domain = Domain.PLAIN
    side: int = SIDE_LEFT
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        """Validate dense shape"""
        if self.A_dense.shape != (self.K * self.H, self.K * self.V):
            raise ShapeError(
                f"Dense plan shape {self.A_dense.shape} does not match "
                f"K={self.K}, H={self.H}, V={self.V}"
            )
        if self.side not in (SIDE_LEFT, SIDE_RIGHT):
            raise ShapeError(f"Unknown plan side {self.side}")

    @property
    def nbytes(self) -> int:
        """Storage of the dense operand at one byte per chunk"""
        return self.A_dense.size * self._chunk_bytes

    @property
    def _chunk_bytes(self) -> int:
        return 1 if self.bp <= 8 else 2

    def block(self, h: int, v: int) -> np.ndarray:
        """K x K block for logical entry (h, v)"""
        K = self.K
        return self.A_dense[h * K:(h + 1) * K, v * K:(v + 1) * K]

    def to_bytes(self) -> bytes:
        """Serialize to the versioned BATP container"""
        rows, cols = self.A_dense.shape
        header = _BATP_HEADER.pack(
            BATP_MAGIC, BATP_VERSION, self.domain.value, self.side,
            self.bp, self.K, self._chunk_bytes, 0,
            self.modulus.q, self.H, self.V, rows, cols,
        )
        dtype = '<u1' if self._chunk_bytes == 1 else '<u2'
        return header + np.ascontiguousarray(self.A_dense, dtype=dtype).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes,
                   modulus_factory: Optional[Callable[[int], Modulus]] = None) -> 'BatMatPlan':
        """Deserialize a BATP container"""
        if len(data) < _BATP_HEADER.size:
            raise SerializationError("BATP container shorter than its header")
        (magic, version, domain, side, bp, K, chunk_bytes, _reserved,
         q, H, V, rows, cols) = _BATP_HEADER.unpack_from(data)
        if magic != BATP_MAGIC:
            raise SerializationError(f"Bad magic {magic!r}, expected {BATP_MAGIC!r}")
        if version != BATP_VERSION:
            raise SerializationError(f"Unsupported BATP version {version}")
        if chunk_bytes not in (1, 2):
            raise SerializationError(f"Invalid chunk width {chunk_bytes} bytes")

        payload = data[_BATP_HEADER.size:]
        if len(payload) != rows * cols * chunk_bytes:
            raise SerializationError(
                f"Payload holds {len(payload)} bytes, header declares {rows * cols * chunk_bytes}"
            )
        dtype = '<u1' if chunk_bytes == 1 else '<u2'
        dense = np.frombuffer(payload, dtype=dtype).reshape(rows, cols).copy()

        if modulus_factory is None:
            from core.application.kernels.modarith import make_modulus
            modulus_factory = make_modulus
        try:
            return cls(
                A_dense=dense, H=H, V=V, K=K, bp=bp,
                modulus=modulus_factory(q), domain=Domain(domain), side=side,
            )
        except ValueError as e:
            raise SerializationError(f"Invalid BATP container: {e}")


@dataclass(frozen=True, eq=False)
class LazyReductionMatrix:
    """R[k, l] = l-th chunk of 2^(bp*(K+k)) mod q"""

    R: np.ndarray
    modulus: Modulus
    K: int
    bp: int = 8

    def __post_init__(self):
        """Validate shape"""
        if self.R.shape != (self.K, self.K):
            raise ShapeError(f"Lazy reduction matrix must be {self.K}x{self.K}")

    def row_value(self, k: int) -> int:
        """Merged value of row k"""
        return sum(int(self.R[k, l]) << (l * self.bp) for l in range(self.K))
