"""Domain entity for HE parameter sets"""

from dataclasses import dataclass, asdict
from typing import Dict, Any

from ..exceptions import ParameterRangeError, UsageError

PARAM_SET_NAMES = ('A', 'B', 'C', 'D', 'custom')


@dataclass(frozen=True)
class ParamSet:
    """Ring degree, limb layout and batch defaults for one configuration

    ``dnum`` is carried as metadata only; no key switching is implemented.
    """

    name: str
    N: int
    log2q: int
    L: int
    L_aux: int
    dnum: int = 1
    batch: int = 1

    def __post_init__(self):
        """Validate parameter set"""
        if self.name not in PARAM_SET_NAMES:
            raise UsageError(f"Unknown parameter set name: {self.name!r}")
        if self.N < 1 or self.N & (self.N - 1):
            raise ParameterRangeError(f"Degree N={self.N} is not a power of two")
        if not 2 <= self.log2q <= 31:
            raise ParameterRangeError(f"log2q={self.log2q} outside [2, 31]")
        if self.L < 1:
            raise ParameterRangeError(f"Limb count L={self.L} must be >= 1")
        if self.L_aux < 1:
            raise ParameterRangeError(f"Auxiliary limb count L'={self.L_aux} must be >= 1")
        if self.dnum < 1 or self.batch < 1:
            raise ParameterRangeError("dnum and batch must be >= 1")

    @property
    def log2Q(self) -> int:
        """Nominal ciphertext modulus width (L limbs of log2q bits)"""
        return self.L * self.log2q

    def scaled(self, N: int) -> 'ParamSet':
        """Same limb layout at a different degree (desk-scale runs)"""
        data = asdict(self)
        data['N'] = N
        return ParamSet(**data)

    def to_dict(self) -> Dict[str, Any]:
        """Convert parameter set to dictionary"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ParamSet':
        """Create ParamSet from dictionary"""
        try:
            return cls(
                name=data.get('name', 'custom'),
                N=int(data['N']),
                log2q=int(data.get('log2q', 28)),
                L=int(data['L']),
                L_aux=int(data.get('L_aux', data['L'])),
                dnum=int(data.get('dnum', 1)),
                batch=int(data.get('batch', 1)),
            )
        except KeyError as e:
            raise UsageError(f"Custom parameter set is missing field {e}")
