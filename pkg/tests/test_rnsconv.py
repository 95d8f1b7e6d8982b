import numpy as np
import pytest

from core.application.kernels.modarith import make_modulus
from core.application.kernels.nttmat import compile_ntt_plan, schoolbook_negacyclic
from core.application.kernels.rnsconv import (
    bconv,
    bconv_oracle,
    compile_bconv_plans,
    crt_decompose,
    crt_recompose,
    he_add,
    he_mult_tensor,
    he_rotate_nokey,
    make_basis,
    rescale,
    rescale_oracle,
    rns_intt,
    rns_ntt,
)
from core.domain.entities.op_count import OpCount
from core.domain.entities.reduction_strategy import ReductionStrategy
from core.domain.entities.rns import RnsBasis, RnsPoly
from core.domain.exceptions import ConfigurationError, ParameterRangeError, ShapeError
from core.infrastructure.utils.rng import random_limbs
from core.infrastructure.utils.worker_pool import WorkerPool

N = 64


@pytest.fixture(scope="module")
def source():
    return make_basis(28, N, 4)


@pytest.fixture(scope="module")
def target(source):
    return make_basis(28, N, 3, exclude=source.q_values)


def _random_poly(rng, basis, n=N):
    return RnsPoly(limbs=random_limbs(rng, basis.q_values, n), basis=basis)


class TestBasis:
    def test_crt_example(self):
        basis = RnsBasis((make_modulus(17), make_modulus(97)))
        p = crt_decompose([100], basis)
        assert p.limbs[:, 0].tolist() == [15, 3]
        assert crt_recompose(p).tolist() == [100]

    def test_round_trip(self, source, rng):
        p = _random_poly(rng, source)
        assert crt_decompose(crt_recompose(p), source) == p

    def test_non_coprime(self):
        m = make_modulus(17)
        with pytest.raises(ConfigurationError):
            RnsBasis((m, m))

    def test_coefficient_out_of_range(self):
        basis = RnsBasis((make_modulus(17), make_modulus(97)))
        with pytest.raises(ParameterRangeError):
            crt_decompose([17 * 97], basis)

    def test_limb_shape(self, source):
        with pytest.raises(ShapeError):
            RnsPoly(limbs=np.zeros((2, N), dtype=np.uint64), basis=source)

    def test_target_is_disjoint(self, source, target):
        assert not source.overlaps(target)


class TestBasisConversion:
    @pytest.mark.parametrize('strategy', [ReductionStrategy.BARRETT64,
                                          ReductionStrategy.MONTGOMERY,
                                          ReductionStrategy.SHOUP])
    @pytest.mark.parametrize('use_bat', [True, False])
    def test_matches_formula(self, strategy, use_bat, source, target, rng):
        p = _random_poly(rng, source)
        expected, slack = bconv_oracle(p, target)
        out = bconv(p, target, strategy, use_bat)
        assert out.basis == target
        assert np.array_equal(out.limbs, expected)
        assert all(0 <= int(e) < source.L for e in slack)

    def test_converted_value_is_off_by_multiples_of_q(self, source, target, rng):
        p = _random_poly(rng, source)
        x = crt_recompose(p)
        out = crt_recompose(bconv(p, target))
        P = target.Q
        offsets = [((int(o) - int(v)) % P) for o, v in zip(out, x)]
        allowed = {e * source.Q % P for e in range(source.L)}
        assert set(offsets) <= allowed

    def test_precompiled_plans_on_pool(self, source, target, rng):
        p = _random_poly(rng, source)
        plans = compile_bconv_plans(source, target)
        assert len(plans) == target.L
        pool = WorkerPool(num_workers=2, name="Test")
        try:
            pooled, serial = OpCount(), OpCount()
            out = bconv(p, target, plans=plans, ops=pooled, pool=pool)
            assert out == bconv(p, target, plans=plans, ops=serial)
            assert pooled.to_dict() == serial.to_dict()
        finally:
            pool.cleanup()

    def test_wide_source_primes(self, rng):
        source = make_basis(30, N, 2)
        target = make_basis(20, N, 2)
        p = _random_poly(rng, source)
        expected, _ = bconv_oracle(p, target)
        assert np.array_equal(bconv(p, target).limbs, expected)

    def test_overlap_rejected(self, source, rng):
        with pytest.raises(ConfigurationError):
            bconv(_random_poly(rng, source), source)


class TestRescale:
    @pytest.mark.parametrize('count', [1, 2])
    def test_matches_oracle(self, count, source, rng):
        p = _random_poly(rng, source)
        out = rescale(p, count)
        assert out.L == source.L - count
        expected = rescale_oracle(crt_recompose(p), source, count)
        assert crt_recompose(out).tolist() == expected.tolist()

    def test_single_limb(self, source, rng):
        p = rescale(_random_poly(rng, source), 3)
        with pytest.raises(ParameterRangeError):
            rescale(p)


class TestHeKernels:
    def test_add(self, source, rng):
        a, b = _random_poly(rng, source), _random_poly(rng, source)
        out = he_add(a, b)
        for i, q in enumerate(source.q_values):
            assert out.limbs[i].tolist() == [(int(x) + int(y)) % q for x, y in zip(a.limbs[i], b.limbs[i])]

    def test_add_basis_mismatch(self, source, target, rng):
        with pytest.raises(ConfigurationError):
            he_add(_random_poly(rng, source), _random_poly(rng, target))

    def test_mult_tensor(self, source, rng):
        c = (_random_poly(rng, source), _random_poly(rng, source))
        d = (_random_poly(rng, source), _random_poly(rng, source))
        ops = OpCount()
        e0, e1, e2 = he_mult_tensor(c, d, ReductionStrategy.MONTGOMERY, ops)
        assert ops.modmuls == 4 * source.L * N
        for i, q in enumerate(source.q_values):
            c0, c1 = c[0].limbs[i].astype(object), c[1].limbs[i].astype(object)
            d0, d1 = d[0].limbs[i].astype(object), d[1].limbs[i].astype(object)
            assert e0.limbs[i].tolist() == ((c0 * d0) % q).tolist()
            assert e1.limbs[i].tolist() == ((c0 * d1 + c1 * d0) % q).tolist()
            assert e2.limbs[i].tolist() == ((c1 * d1) % q).tolist()

    def test_rotation_is_ring_automorphism(self, source, rng):
        a, b = _random_poly(rng, source), _random_poly(rng, source)
        product = RnsPoly(
            limbs=np.stack([schoolbook_negacyclic(a.limbs[i], b.limbs[i], m)
                            for i, m in enumerate(source.moduli)]),
            basis=source,
        )
        rotated_a, rotated_b = he_rotate_nokey((a, b), 5)
        rotated_product, _ = he_rotate_nokey((product, b), 5)
        for i, m in enumerate(source.moduli):
            assert np.array_equal(
                schoolbook_negacyclic(rotated_a.limbs[i], rotated_b.limbs[i], m),
                rotated_product.limbs[i],
            )


class TestLimbwiseNtt:
    def test_round_trip(self, source, rng):
        plans = [compile_ntt_plan(N, 8, 8, m) for m in source.moduli]
        p = _random_poly(rng, source)
        ops = OpCount()
        forward = rns_ntt(p, plans, ops)
        assert ops.modmuls > 0
        assert rns_intt(forward, plans) == p

    def test_plan_mismatch(self, source, target, rng):
        plans = [compile_ntt_plan(N, 8, 8, m) for m in target.moduli]
        with pytest.raises(ConfigurationError):
            rns_ntt(_random_poly(rng, source), plans)


@pytest.mark.slow
class TestProductionSizes:
    @pytest.mark.parametrize('sizes', [(12, 28), (16, 40)])
    def test_bconv_at_4096(self, sizes, rng):
        L, L_target = sizes
        source = make_basis(28, 4096, L)
        target = make_basis(28, 4096, L_target, exclude=source.q_values)
        p = _random_poly(rng, source, 4096)
        expected, slack = bconv_oracle(p, target)
        assert np.array_equal(bconv(p, target).limbs, expected)
        assert all(0 <= int(e) < L for e in slack)

    def test_crt_bijection_with_51_limbs(self, rng):
        basis = make_basis(28, 65536, 51)
        p = _random_poly(rng, basis, 256)
        assert crt_decompose(crt_recompose(p), basis) == p

        values = [int.from_bytes(rng.bytes(200), 'little') % basis.Q for _ in range(256)]
        back = crt_recompose(crt_decompose(np.array(values, dtype=object), basis))
        assert [int(v) for v in back] == values

    @pytest.mark.parametrize('count', [1, 2])
    def test_rescale_ten_thousand_polynomials(self, count, rng):
        # 10^4 degree-16 polynomials side by side; rescale acts per coefficient
        basis = make_basis(28, 16, 4)
        p = _random_poly(rng, basis, 16 * 10_000)
        out = rescale(p, count)
        expected = rescale_oracle(crt_recompose(p), basis, count)
        assert crt_recompose(out).tolist() == expected.tolist()
