"""Service for compiling and caching BAT and NTT plans"""

import hashlib
import logging
from typing import List, Optional

import numpy as np

from core.application.kernels.bat import (
    build_lazy_reduction_matrix,
    offline_compile_left,
    offline_compile_right,
)
from core.application.kernels.nttmat import compile_ntt_plan
from core.domain.entities.bat_matrices import BatMatPlan, LazyReductionMatrix, SIDE_LEFT, SIDE_RIGHT
from core.domain.entities.modulus import Modulus
from core.domain.entities.ntt_plan import NttPlan
from core.domain.entities.reduction_strategy import ReductionStrategy
from core.domain.entities.rns import RnsBasis
from core.infrastructure.cache.plan_cache import PlanCache

logger = logging.getLogger(__name__)


def bat_plan_key(matrix: np.ndarray, m: Modulus, bp: int, strategy: ReductionStrategy, side: int) -> str:
    """Digest of (q, bp, domain, side, matrix bytes)"""
    h = hashlib.sha256(f"{m.q}:{bp}:{strategy.domain.value}:{side}:{matrix.shape}".encode())
    h.update(np.ascontiguousarray(matrix, dtype='<u8').tobytes())
    return h.hexdigest()[:32]


class PlanService:
    """Compiles known operands once and serves them from the plan cache"""

    def __init__(self, plan_cache: PlanCache, default_bp: int = 8):
        self.plan_cache = plan_cache
        self.default_bp = default_bp

    def left_plan(self, A: np.ndarray, m: Modulus, bp: Optional[int] = None,
                  strategy: ReductionStrategy = ReductionStrategy.BARRETT64) -> BatMatPlan:
        """BAT plan for a known left operand"""
        bp = bp or self.default_bp
        A = np.asarray(A, dtype=np.uint64)
        key = bat_plan_key(A, m, bp, strategy, SIDE_LEFT)
        return self.plan_cache.get_or_compile(
            key, lambda: offline_compile_left(A, m, bp, strategy.domain)
        )

    def right_plan(self, B: np.ndarray, m: Modulus, bp: Optional[int] = None,
                   strategy: ReductionStrategy = ReductionStrategy.BARRETT64) -> BatMatPlan:
        """BAT plan for a known right operand"""
        bp = bp or self.default_bp
        B = np.asarray(B, dtype=np.uint64)
        key = bat_plan_key(B, m, bp, strategy, SIDE_RIGHT)
        return self.plan_cache.get_or_compile(
            key, lambda: offline_compile_right(B, m, bp, strategy.domain)
        )

    def ntt_plan(self, N: int, m: Modulus, R: Optional[int] = None, C: Optional[int] = None,
                 bp: Optional[int] = None,
                 strategy: ReductionStrategy = ReductionStrategy.BARRETT64) -> NttPlan:
        """Compiled 3-step NTT plan, kept in memory"""
        bp = bp or self.default_bp
        key = f"ntt:{N}:{R}:{C}:{m.q}:{bp}:{strategy.value}"

        def compile_plan() -> NttPlan:
            logger.info(f"Compiling NTT plan N={N} q={m.q} strategy={strategy}")
            return compile_ntt_plan(N, R, C, m, bp, strategy)

        return self.plan_cache.get_or_compile(key, compile_plan)

    def rns_ntt_plans(self, basis: RnsBasis, N: int, R: Optional[int] = None,
                      C: Optional[int] = None, bp: Optional[int] = None,
                      strategy: ReductionStrategy = ReductionStrategy.BARRETT64) -> List[NttPlan]:
        """One NTT plan per limb"""
        return [self.ntt_plan(N, m, R, C, bp, strategy) for m in basis.moduli]

    def bconv_plans(self, source: RnsBasis, target: RnsBasis, bp: Optional[int] = None,
                    strategy: ReductionStrategy = ReductionStrategy.BARRETT64) -> List[BatMatPlan]:
        """Per target modulus, the compiled cross-table row (Q/q_i mod p_j)"""
        table = source.cross_table(target)
        return [
            self.left_plan(table[:, j][None, :], p, bp, strategy)
            for j, p in enumerate(target.moduli)
        ]

    def lazy_matrix(self, m: Modulus, bp: Optional[int] = None) -> LazyReductionMatrix:
        bp = bp or self.default_bp
        return self.plan_cache.get_or_compile(
            f"lazy:{m.q}:{bp}", lambda: build_lazy_reduction_matrix(m, bp)
        )
