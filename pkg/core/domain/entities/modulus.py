"""Domain entity for word-size moduli and their reduction constants"""

from dataclasses import dataclass
from typing import Dict, Any

from ..exceptions import ParameterRangeError

MASK16 = (1 << 16) - 1
MASK32 = (1 << 32) - 1


@dataclass(frozen=True)
class Modulus:
    """A prime q < 2^31 with every precomputed reduction constant

    Instances are built by ``make_modulus`` which also checks primality;
    ``__post_init__`` only re-checks the arithmetic relations between fields.
    """

    q: int
    log2q: int
    barrett_s: int
    barrett_m: int
    mont_qinv: int
    mont_r2: int
    q_lo: int
    q_hi: int
    # 2^32 mod q: entering Montgomery form costs one mulmod by this
    mont_r: int
    # floor(2^64 / q) for the full-width barrett64 routine
    barrett64_m: int

    def __post_init__(self):
        """Validate the precomputed constants"""
        q = self.q
        if not 2 < q < (1 << 31):
            raise ParameterRangeError(f"Modulus {q} outside (2, 2^31)")
        if self.log2q != q.bit_length():
            raise ParameterRangeError(f"log2q={self.log2q} does not match q={q}")
        s = self.barrett_s
        if not (self.barrett_m * q <= (1 << s) < (self.barrett_m + 1) * q):
            raise ParameterRangeError(f"Barrett constant m={self.barrett_m} invalid for q={q}")
        if (self.mont_qinv * q) & MASK32 != 1:
            raise ParameterRangeError(f"Montgomery inverse {self.mont_qinv} invalid for q={q}")
        if self.q_hi * (1 << 16) + self.q_lo != q:
            raise ParameterRangeError(f"16-bit split ({self.q_hi}, {self.q_lo}) does not rebuild {q}")

    @property
    def bits(self) -> int:
        """Bit width of q"""
        return self.log2q

    def chunks(self, bp: int = 8) -> int:
        """Number of bp-bit chunks K needed to hold a residue"""
        return -(-self.log2q // bp)

    def inverse(self, x: int) -> int:
        """Multiplicative inverse of x mod q"""
        return pow(int(x) % self.q, -1, self.q)

    def to_dict(self) -> Dict[str, Any]:
        """Convert modulus to dictionary"""
        return {
            'q': self.q,
            'log2q': self.log2q,
            'barrett_s': self.barrett_s,
            'barrett_m': self.barrett_m,
            'mont_qinv': self.mont_qinv,
            'mont_r2': self.mont_r2,
            'q_lo': self.q_lo,
            'q_hi': self.q_hi,
        }

    def __int__(self) -> int:
        return self.q

    def __repr__(self) -> str:
        return f"Modulus(q={self.q}, bits={self.log2q})"
