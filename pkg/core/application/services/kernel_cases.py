"""Seeded kernel cells shared by verification and benchmarking

A cell bundles a kernel invocation on seeded inputs with its oracle. Inputs
depend on (seed, kernel, batch) only, so a strategy sweep sees the same data.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, TYPE_CHECKING

import numpy as np

from core.application.kernels.bat import hpsm_conv, lazy_reduce64
from core.application.kernels.lpmm import (
    AccHook,
    mat_mod_mul,
    reference_mat_mod_mul,
    sparse_baseline_matmul,
)
from core.application.kernels.modarith import (
    find_primitive_root,
    shoup_precompute,
    to_montgomery,
    vec_mod_elementwise,
)
from core.application.kernels.nttmat import (
    bit_reverse_perm,
    ct_ntt,
    default_rc,
    four_step_ntt,
    intt3,
    naive_negacyclic_ntt,
    negacyclic_polymul,
    ntt3_layout_invariant,
    schoolbook_negacyclic,
)
from core.application.kernels.rnsconv import (
    bconv,
    bconv_oracle,
    crt_decompose,
    crt_recompose,
    he_add,
    he_mult_tensor,
    rescale,
    rescale_oracle,
)
from core.application.services.param_set_service import ParamSetService
from core.application.services.plan_service import PlanService
from core.domain.entities.bench import BenchConfig
from core.domain.entities.modulus import Modulus
from core.domain.entities.op_count import OpCount
from core.domain.entities.reduction_strategy import Domain, ReductionStrategy
from core.domain.entities.rns import RnsBasis, RnsPoly
from core.domain.exceptions import UsageError
from core.infrastructure.utils.rng import make_rng, random_limbs, random_residues

if TYPE_CHECKING:
    from core.infrastructure.utils.worker_pool import WorkerPool

logger = logging.getLogger(__name__)

# Above this degree the O(N^2) transform oracle gives way to the radix-2 one
NAIVE_NTT_LIMIT = 4096


@dataclass
class KernelCase:
    """A runnable kernel on fixed inputs plus the oracle for its output

    Kernels that accumulate through the matrix engine also expose
    ``run_with_hook``, which hands their accumulators to a hook before merging.
    """

    kernel: str
    run: Callable[[Optional[OpCount]], np.ndarray]
    expected: Callable[[], np.ndarray]
    shape: Dict[str, int] = field(default_factory=dict)
    label: str = ''
    run_with_hook: Optional[Callable[[Optional[OpCount], AccHook], np.ndarray]] = None


def _object_mod(values: np.ndarray, q: int) -> np.ndarray:
    return np.asarray(values % q, dtype=np.uint64)


def _limb_oracle(fn, basis: RnsBasis, *polys: RnsPoly) -> np.ndarray:
    """Apply fn to big-integer limbs and reduce each limb by its modulus"""
    rows = []
    for i, q in enumerate(basis.q_values):
        rows.append(_object_mod(fn(*(p.limbs[i].astype(object) for p in polys)), q))
    return np.stack(rows)


def ntt_oracle(a: np.ndarray, m: Modulus, psi: int, bit_reversed: bool = True) -> np.ndarray:
    """Negacyclic NTT reference; naive evaluation up to NAIVE_NTT_LIMIT"""
    N = a.shape[-1]
    brv = bit_reverse_perm(N)
    if N <= NAIVE_NTT_LIMIT:
        out = naive_negacyclic_ntt(a, m, psi)
        return brv.apply(out) if bit_reversed else out
    out = ct_ntt(a, m, psi, ReductionStrategy.NATIVE)
    return out if bit_reversed else brv.apply(out)


class KernelCaseBuilder:
    """Builds the seeded cell for a (kernel, batch, strategy) triple"""

    def __init__(self, plan_service: PlanService, param_set_service: ParamSetService):
        self.plan_service = plan_service
        self.param_set_service = param_set_service

    def build(self, cfg: BenchConfig, batch: int, strategy: ReductionStrategy,
              pool: Optional['WorkerPool'] = None) -> KernelCase:
        builder = getattr(self, f"_case_{cfg.kernel}", None)
        if builder is None:
            raise UsageError(f"No benchmark cell for kernel {cfg.kernel!r}")
        rng = make_rng(cfg.seed, f"{cfg.kernel}:{batch}")
        case = builder(cfg, batch, strategy, rng, pool)
        logger.debug(f"Built cell {case.label} batch={batch} strategy={strategy}")
        return case

    # -- helpers ---------------------------------------------------------

    def _modulus(self, cfg: BenchConfig) -> Modulus:
        return self.param_set_service.primary_modulus(cfg.param_set)

    def _rc(self, cfg: BenchConfig):
        return cfg.rc or default_rc(cfg.param_set.N)

    def _ntt_shape(self, cfg: BenchConfig) -> Dict[str, int]:
        R, C = self._rc(cfg)
        return {'N': cfg.param_set.N, 'R': R, 'C': C}

    def _rns_shape(self, cfg: BenchConfig, with_target: bool = False) -> Dict[str, int]:
        shape = {'N': cfg.param_set.N, 'L': cfg.param_set.L}
        if with_target:
            shape['Lp'] = cfg.param_set.L_aux
        return shape

    def _random_poly(self, rng, basis: RnsBasis, columns: int) -> RnsPoly:
        return RnsPoly(limbs=random_limbs(rng, basis.q_values, columns), basis=basis)

    def _set_label(self, cfg: BenchConfig) -> str:
        ps = cfg.param_set
        return f"Set {ps.name}" if ps.name != 'custom' else 'custom'

    # -- NTT family --------------------------------------------------------

    def _case_ntt3(self, cfg, batch, strategy, rng, pool):
        m = self._modulus(cfg)
        N = cfg.param_set.N
        R, C = self._rc(cfg)
        plan = self.plan_service.ntt_plan(N, m, R, C, cfg.bp, strategy)
        a = random_residues(rng, m.q, (batch, N))
        return KernelCase(
            kernel='ntt3',
            run=lambda ops: ntt3_layout_invariant(a, plan, ops, pool),
            run_with_hook=lambda ops, hook: ntt3_layout_invariant(a, plan, ops, pool, hook),
            expected=lambda: ntt_oracle(a, m, plan.psi),
            shape=self._ntt_shape(cfg),
            label=f"NTT {self._set_label(cfg)} N={N} ({R}x{C})",
        )

    def _case_ct_ntt(self, cfg, batch, strategy, rng, pool):
        m = self._modulus(cfg)
        N = cfg.param_set.N
        psi = find_primitive_root(m, 2 * N)
        a = random_residues(rng, m.q, (batch, N))
        return KernelCase(
            kernel='ct_ntt',
            run=lambda ops: ct_ntt(a, m, psi, strategy, ops),
            expected=lambda: ntt_oracle(a, m, psi),
            shape={'N': N},
            label=f"radix-2 NTT {self._set_label(cfg)} N={N}",
        )

    def _case_four_step(self, cfg, batch, strategy, rng, pool):
        m = self._modulus(cfg)
        N = cfg.param_set.N
        R, C = self._rc(cfg)
        psi = find_primitive_root(m, 2 * N)
        a = random_residues(rng, m.q, (batch, N))
        return KernelCase(
            kernel='four_step',
            run=lambda ops: four_step_ntt(a, R, C, m, psi, ops=ops),
            expected=lambda: ntt_oracle(a, m, psi, bit_reversed=False),
            shape=self._ntt_shape(cfg),
            label=f"4-step NTT {self._set_label(cfg)} N={N} ({R}x{C})",
        )

    def _case_intt(self, cfg, batch, strategy, rng, pool):
        m = self._modulus(cfg)
        N = cfg.param_set.N
        R, C = self._rc(cfg)
        plan = self.plan_service.ntt_plan(N, m, R, C, cfg.bp, strategy)
        a = random_residues(rng, m.q, (batch, N))
        a_hat = ct_ntt(a, m, plan.psi, ReductionStrategy.NATIVE)
        return KernelCase(
            kernel='intt',
            run=lambda ops: intt3(a_hat, plan, ops, pool),
            run_with_hook=lambda ops, hook: intt3(a_hat, plan, ops, pool, hook),
            expected=lambda: a,
            shape=self._ntt_shape(cfg),
            label=f"INTT {self._set_label(cfg)} N={N} ({R}x{C})",
        )

    def _case_polymul(self, cfg, batch, strategy, rng, pool):
        m = self._modulus(cfg)
        N = cfg.param_set.N
        R, C = self._rc(cfg)
        plan = self.plan_service.ntt_plan(N, m, R, C, cfg.bp, strategy)
        a = random_residues(rng, m.q, (batch, N))
        b = random_residues(rng, m.q, (batch, N))
        return KernelCase(
            kernel='polymul',
            run=lambda ops: negacyclic_polymul(a, b, m, plan, ops),
            expected=lambda: np.stack([schoolbook_negacyclic(a[i], b[i], m) for i in range(batch)]),
            shape=self._ntt_shape(cfg),
            label=f"PolyMul {self._set_label(cfg)} N={N}",
        )

    # -- word-level kernels ----------------------------------------------

    def _case_vecmodmul(self, cfg, batch, strategy, rng, pool):
        m = self._modulus(cfg)
        N = cfg.param_set.N
        a = random_residues(rng, m.q, (batch, N))
        b = random_residues(rng, m.q, (batch, N))
        b_in, b_domain, b_shoup = b, Domain.PLAIN, None
        if strategy is ReductionStrategy.MONTGOMERY:
            b_in, b_domain = np.asarray(to_montgomery(b, m), dtype=np.uint64), Domain.MONTGOMERY
        elif strategy is ReductionStrategy.SHOUP:
            b_shoup = shoup_precompute(b, m)

        def run(ops):
            if ops is not None:
                ops.modmuls += a.size
            return vec_mod_elementwise('mul', a, b_in, m, strategy, b_domain, b_shoup)

        return KernelCase(
            kernel='vecmodmul',
            run=run,
            expected=lambda: _object_mod(a.astype(object) * b.astype(object), m.q),
            shape={'N': N},
            label=f"VecModMul {self._set_label(cfg)} N={N}",
        )

    def _case_hpsm(self, cfg, batch, strategy, rng, pool):
        m = self._modulus(cfg)
        N = cfg.param_set.N
        a = random_residues(rng, m.q, (batch, N))
        b = random_residues(rng, m.q, (batch, N))
        return KernelCase(
            kernel='hpsm',
            run=lambda ops: hpsm_conv(a, b, m, cfg.bp, ops),
            expected=lambda: _object_mod(a.astype(object) * b.astype(object), m.q),
            shape={'N': N},
            label=f"chunk-convolution mulmod {self._set_label(cfg)} N={N}",
        )

    def _case_lazyreduce(self, cfg, batch, strategy, rng, pool):
        if strategy is ReductionStrategy.MONTGOMERY:
            raise UsageError("lazyreduce returns plain residues; use native, barrett64 or shoup")
        m = self._modulus(cfg)
        N = cfg.param_set.N
        R = self.plan_service.lazy_matrix(m, cfg.bp)
        width = 2 * R.K * R.bp
        psum = rng.integers(0, np.iinfo(np.uint64).max, size=(batch, N), dtype=np.uint64, endpoint=True)
        if width < 64:
            psum &= np.uint64((1 << width) - 1)
        return KernelCase(
            kernel='lazyreduce',
            run=lambda ops: np.asarray(lazy_reduce64(psum, R, m, strategy.reduce64_strategy, ops),
                                       dtype=np.uint64),
            expected=lambda: _object_mod(psum.astype(object), m.q),
            shape={'N': N},
            label=f"lazy reduction {self._set_label(cfg)} N={N}",
        )

    def _case_matmodmul(self, cfg, batch, strategy, rng, pool):
        if not cfg.use_bat and strategy.domain is Domain.MONTGOMERY:
            raise UsageError("The sparse baseline runs in the plain domain; use --use-bat for montgomery")
        m = self._modulus(cfg)
        H, V, W = cfg.mat_shape
        A = random_residues(rng, m.q, (H, V))
        B = random_residues(rng, m.q, (V, W * batch))

        if cfg.use_bat:
            plan = self.plan_service.left_plan(A, m, cfg.bp, strategy)

            def run_with_hook(ops, hook):
                return mat_mod_mul(A, B, m, cfg.bp, strategy, plan, ops, pool, hook)
        else:
            def run_with_hook(ops, hook):
                result, count = sparse_baseline_matmul(A, B, m, cfg.bp, strategy, pool, hook)
                if ops is not None:
                    ops.merge(count)
                return result

        return KernelCase(
            kernel='matmodmul',
            run=lambda ops: run_with_hook(ops, None),
            run_with_hook=run_with_hook,
            expected=lambda: reference_mat_mod_mul(A, B, m),
            shape={'H': H, 'V': V, 'W': W},
            label=f"MatModMul {H}x{V}x{W}",
        )

    # -- RNS kernels -------------------------------------------------------

    def _case_bconv(self, cfg, batch, strategy, rng, pool):
        source, target = self.param_set_service.bases(cfg.param_set)
        N = cfg.param_set.N
        p = self._random_poly(rng, source, N * batch)
        plans = self.plan_service.bconv_plans(source, target, cfg.bp, strategy) if cfg.use_bat else None
        return KernelCase(
            kernel='bconv',
            run=lambda ops: bconv(p, target, strategy, cfg.use_bat, cfg.bp, plans, ops, pool).limbs,
            expected=lambda: bconv_oracle(p, target)[0],
            shape=self._rns_shape(cfg, with_target=True),
            label=f"BConv {self._set_label(cfg)} L={source.L}->L'={target.L}",
        )

    def _case_rescale(self, cfg, batch, strategy, rng, pool):
        source, _ = self.param_set_service.bases(cfg.param_set)
        if source.L < 2:
            raise UsageError("rescale needs at least two limbs")
        p = self._random_poly(rng, source, cfg.param_set.N * batch)

        def expected():
            values = rescale_oracle(crt_recompose(p), source, 1)
            return crt_decompose(values, source.drop_last()).limbs

        return KernelCase(
            kernel='rescale',
            run=lambda ops: rescale(p, 1, strategy, ops).limbs,
            expected=expected,
            shape=self._rns_shape(cfg),
            label=f"Rescale {self._set_label(cfg)} L={source.L}",
        )

    def _case_he_add(self, cfg, batch, strategy, rng, pool):
        source, _ = self.param_set_service.bases(cfg.param_set)
        columns = cfg.param_set.N * batch
        a = self._random_poly(rng, source, columns)
        b = self._random_poly(rng, source, columns)
        return KernelCase(
            kernel='he_add',
            run=lambda ops: he_add(a, b).limbs,
            expected=lambda: _limb_oracle(lambda x, y: x + y, source, a, b),
            shape=self._rns_shape(cfg),
            label=f"HE-Add {self._set_label(cfg)} L={source.L}",
        )

    def _case_hemult(self, cfg, batch, strategy, rng, pool):
        source, _ = self.param_set_service.bases(cfg.param_set)
        columns = cfg.param_set.N * batch
        c = (self._random_poly(rng, source, columns), self._random_poly(rng, source, columns))
        d = (self._random_poly(rng, source, columns), self._random_poly(rng, source, columns))

        def run(ops):
            return np.stack([e.limbs for e in he_mult_tensor(c, d, strategy, ops)])

        def expected():
            return np.stack([
                _limb_oracle(lambda x, y: x * y, source, c[0], d[0]),
                _limb_oracle(lambda w, x, y, z: w * x + y * z, source, c[0], d[1], c[1], d[0]),
                _limb_oracle(lambda x, y: x * y, source, c[1], d[1]),
            ])

        return KernelCase(
            kernel='hemult',
            run=run,
            expected=expected,
            shape=self._rns_shape(cfg),
            label=f"HE-Mult tensor {self._set_label(cfg)} L={source.L}",
        )
