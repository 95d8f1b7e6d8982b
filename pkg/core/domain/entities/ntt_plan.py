"""Domain entities for compiled NTT plans and index permutations"""

from dataclasses import dataclass, field
from typing import Dict, Any, Optional

import numpy as np

from .bat_matrices import BatMatPlan, SIDE_LEFT, SIDE_RIGHT
from .modulus import Modulus
from .reduction_strategy import Domain, ReductionStrategy
from ..exceptions import RootOfUnityError, ShapeError


@dataclass(frozen=True, eq=False)
class PermIndex:
    """Bijection on [0, n) stored as an index vector"""

    index: np.ndarray

    def __post_init__(self):
        """Validate bijection"""
        idx = np.asarray(self.index)
        if idx.ndim != 1 or not np.array_equal(np.sort(idx), np.arange(idx.size)):
            raise ShapeError("Index vector is not a permutation of [0, n)")

    @property
    def n(self) -> int:
        return int(self.index.size)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """out[..., i] = v[..., index[i]]"""
        v = np.asarray(v)
        if v.shape[-1] != self.n:
            raise ShapeError(f"Vector length {v.shape[-1]} does not match permutation size {self.n}")
        return v[..., self.index]

    def inverse(self) -> 'PermIndex':
        inv = np.empty_like(self.index)
        inv[self.index] = np.arange(self.n)
        return PermIndex(inv)

    def is_involution(self) -> bool:
        return bool(np.array_equal(self.index[self.index], np.arange(self.n)))

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class NttPlan:
    """Compiled layout-invariant 3-step negacyclic NTT and its inverse

    Forward: out = ((left @ A) * mid) @ right with A the input reshaped R x C
    row-major; the flattened output is the NTT in bit-reversed order.
    Inverse: a = left_inv @ ((out @ right_inv) * mid_inv), N^-1 folded into
    left_inv. Matrix operands are BAT plans; ``mid`` and ``mid_inv`` are
    stored in the plan's domain.
    """

    N: int
    R: int
    C: int
    modulus: Modulus
    psi: int
    bp: int
    strategy: ReductionStrategy
    left: BatMatPlan
    mid: np.ndarray
    right: BatMatPlan
    left_inv: BatMatPlan
    mid_inv: np.ndarray
    right_inv: BatMatPlan
    mid_shoup: Optional[np.ndarray] = None
    mid_inv_shoup: Optional[np.ndarray] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        """Validate shape and root of unity"""
        if self.R * self.C != self.N:
            raise ShapeError(f"R*C = {self.R * self.C} does not equal N = {self.N}")
        q = self.modulus.q
        if pow(self.psi, self.N, q) != q - 1:
            raise RootOfUnityError(f"psi={self.psi} is not a primitive {2 * self.N}-th root mod {q}")
        if self.mid.shape != (self.R, self.C) or self.mid_inv.shape != (self.R, self.C):
            raise ShapeError(f"Twiddle matrices must be {self.R}x{self.C}")
        sides = (self.left.side, self.right.side, self.left_inv.side, self.right_inv.side)
        if sides != (SIDE_LEFT, SIDE_RIGHT, SIDE_LEFT, SIDE_RIGHT):
            raise ShapeError("Plan matrices compiled for the wrong operand side")

    @property
    def omega(self) -> int:
        """Primitive N-th root psi^2"""
        return self.psi * self.psi % self.modulus.q

    @property
    def domain(self) -> Domain:
        return self.strategy.domain

    @property
    def rc(self) -> str:
        return f"{self.R}x{self.C}"

    def to_dict(self) -> Dict[str, Any]:
        """Summary of the plan (matrices omitted)"""
        return {
            'N': self.N,
            'R': self.R,
            'C': self.C,
            'q': self.modulus.q,
            'psi': self.psi,
            'bp': self.bp,
            'strategy': self.strategy.value,
            'plan_bytes': sum(p.nbytes for p in (self.left, self.right, self.left_inv, self.right_inv)),
            **self.meta,
        }
