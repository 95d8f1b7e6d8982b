"""Domain entity for modular reduction strategies"""

from enum import Enum
from typing import List

from ..exceptions import UsageError


class ReductionStrategy(Enum):
    """Reduction routine used after a wide (64-bit) product"""
    NATIVE = 'native'
    BARRETT64 = 'barrett64'
    MONTGOMERY = 'montgomery'
    SHOUP = 'shoup'

    @classmethod
    def from_string(cls, name: str) -> 'ReductionStrategy':
        """Convert string to strategy enum"""
        aliases = {
            'native': cls.NATIVE,
            'barrett': cls.BARRETT64,
            'barrett64': cls.BARRETT64,
            'montgomery': cls.MONTGOMERY,
            'mont': cls.MONTGOMERY,
            'shoup': cls.SHOUP,
        }
        try:
            return aliases[name.lower().strip()]
        except (KeyError, AttributeError):
            raise UsageError(f"Unknown reduction strategy: {name!r}")

    def __str__(self) -> str:
        return self.value

    @property
    def domain(self) -> 'Domain':
        """Domain compiled constants live in for this strategy"""
        return Domain.MONTGOMERY if self is ReductionStrategy.MONTGOMERY else Domain.PLAIN

    @property
    def reduce64_strategy(self) -> 'ReductionStrategy':
        """Strategy used to reduce a 64-bit merged sum

        Shoup only applies to a fixed multiplicand, so merged sums fall back
        to barrett64.
        """
        if self is ReductionStrategy.SHOUP:
            return ReductionStrategy.BARRETT64
        return self

    @classmethod
    def get_all(cls) -> List['ReductionStrategy']:
        """Get list of all strategies"""
        return list(cls)

    @classmethod
    def matrix_strategies(cls) -> List['ReductionStrategy']:
        """Strategies usable for reducing merged matrix sums"""
        return [cls.NATIVE, cls.BARRETT64, cls.MONTGOMERY]


class Domain(Enum):
    """Representation of precompiled constants"""
    PLAIN = 0
    MONTGOMERY = 1

    def __str__(self) -> str:
        return self.name.lower()
