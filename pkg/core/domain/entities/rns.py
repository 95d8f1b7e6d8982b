"""Domain entities for residue-number-system bases and polynomials"""

import hashlib
import math
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Any, List, Tuple

import numpy as np

from .modulus import Modulus
from ..exceptions import ConfigurationError, ParameterRangeError, SerializationError, ShapeError

RNSP_MAGIC = b'RNSP'
RNSP_VERSION = 1
# magic, version, L, N, basis digest
_RNSP_HEADER = struct.Struct('<4sHHI32s')


@dataclass(frozen=True)
class RnsBasis:
    """Pairwise coprime word-size moduli q_0..q_{L-1}"""

    moduli: Tuple[Modulus, ...]

    def __post_init__(self):
        """Validate coprimality"""
        if not self.moduli:
            raise ConfigurationError("An RNS basis needs at least one modulus")
        qs = [m.q for m in self.moduli]
        for i, a in enumerate(qs):
            for b in qs[i + 1:]:
                if math.gcd(a, b) != 1:
                    raise ConfigurationError(f"Moduli {a} and {b} are not coprime")

    @property
    def L(self) -> int:
        return len(self.moduli)

    @property
    def q_values(self) -> List[int]:
        return [m.q for m in self.moduli]

    @cached_property
    def Q(self) -> int:
        """Product of all moduli (big integer)"""
        return math.prod(self.q_values)

    @cached_property
    def qhat(self) -> List[int]:
        """Q / q_i"""
        return [self.Q // q for q in self.q_values]

    @cached_property
    def qhat_inv(self) -> np.ndarray:
        """(Q / q_i)^-1 mod q_i"""
        return np.array(
            [pow(qh % q, -1, q) for qh, q in zip(self.qhat, self.q_values)],
            dtype=np.uint64,
        )

    @cached_property
    def digest(self) -> bytes:
        """SHA-256 of the moduli as little-endian u32"""
        return hashlib.sha256(struct.pack(f'<{self.L}I', *self.q_values)).digest()

    def cross_table(self, target: 'RnsBasis') -> np.ndarray:
        """L x L' table of (Q / q_i) mod p_j"""
        return np.array(
            [[qh % p for p in target.q_values] for qh in self.qhat],
            dtype=np.uint64,
        )

    def overlaps(self, other: 'RnsBasis') -> bool:
        return bool(set(self.q_values) & set(other.q_values))

    def drop_last(self, count: int = 1) -> 'RnsBasis':
        """Basis without its last `count` moduli"""
        if count >= self.L:
            raise ParameterRangeError(f"Cannot drop {count} of {self.L} moduli")
        return RnsBasis(self.moduli[:self.L - count])

    def to_dict(self) -> Dict[str, Any]:
        return {'moduli': self.q_values, 'digest': self.digest.hex()}

    def __len__(self) -> int:
        return self.L


@dataclass(frozen=True, eq=False)
class RnsPoly:
    """L x N residues, limb i taken mod q_i"""

    limbs: np.ndarray
    basis: RnsBasis

    def __post_init__(self):
        """Validate shape and residues"""
        if self.limbs.ndim != 2 or self.limbs.shape[0] != self.basis.L:
            raise ShapeError(
                f"Limb matrix of shape {self.limbs.shape} does not fit a basis of {self.basis.L} moduli"
            )
        for i, q in enumerate(self.basis.q_values):
            if self.limbs.shape[1] and int(self.limbs[i].max()) >= q:
                raise ParameterRangeError(f"Limb {i} holds {int(self.limbs[i].max())} >= q_{i}={q}")

    @property
    def L(self) -> int:
        return self.limbs.shape[0]

    @property
    def N(self) -> int:
        return self.limbs.shape[1]

    def limb(self, i: int) -> np.ndarray:
        return self.limbs[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RnsPoly):
            return NotImplemented
        return self.basis == other.basis and np.array_equal(self.limbs, other.limbs)

    __hash__ = None

    def to_bytes(self) -> bytes:
        """Serialize to the versioned RNSP container"""
        header = _RNSP_HEADER.pack(RNSP_MAGIC, RNSP_VERSION, self.L, self.N, self.basis.digest)
        return header + np.ascontiguousarray(self.limbs, dtype='<u4').tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, basis: RnsBasis) -> 'RnsPoly':
        """Deserialize an RNSP container against a known basis"""
        if len(data) < _RNSP_HEADER.size:
            raise SerializationError("RNSP container shorter than its header")
        magic, version, L, N, digest = _RNSP_HEADER.unpack_from(data)
        if magic != RNSP_MAGIC:
            raise SerializationError(f"Bad magic {magic!r}, expected {RNSP_MAGIC!r}")
        if version != RNSP_VERSION:
            raise SerializationError(f"Unsupported RNSP version {version}")
        if digest != basis.digest or L != basis.L:
            raise SerializationError("RNSP container was written for a different basis")
        payload = data[_RNSP_HEADER.size:]
        if len(payload) != 4 * L * N:
            raise SerializationError(f"Payload holds {len(payload)} bytes, header declares {4 * L * N}")
        limbs = np.frombuffer(payload, dtype='<u4').reshape(L, N).astype(np.uint64)
        try:
            return cls(limbs=limbs, basis=basis)
        except ValueError as e:
            raise SerializationError(f"Invalid RNSP container: {e}")
