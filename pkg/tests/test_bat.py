import numpy as np
import pytest

from core.application.kernels.bat import (
    bat_fold,
    bat_scalar_mulmod,
    build_lazy_reduction_matrix,
    carry_propagate,
    construct_toeplitz,
    direct_scalar_bat,
    hpsm_conv,
    hpsm_conv_partials,
    lazy_partial_reduce,
    lazy_reduce64,
    offline_compile_scalar,
    sparse_scalar_mulmod,
)
from core.application.kernels.modarith import chunk_decompose, chunk_merge, make_modulus, merge_bound
from core.domain.entities.bat_matrices import BatScalarMatrix
from core.domain.entities.op_count import OpCount
from core.domain.entities.reduction_strategy import Domain, ReductionStrategy
from core.domain.exceptions import ConfigurationError, ParameterRangeError, ShapeError
from core.infrastructure.utils.rng import random_residues


def _products(a, b, q):
    return [int(a) * int(x) % q for x in b]


class TestToeplitz:
    def test_first_column(self):
        X = construct_toeplitz([4, 3, 2, 1])
        assert X.data.shape == (7, 4)
        assert list(X.data[:, 0]) == [4, 3, 2, 1, 0, 0, 0]

    def test_diagonal_layout(self):
        X = construct_toeplitz([4, 3, 2, 1])
        for i, a in enumerate([4, 3, 2, 1]):
            for j in range(4):
                assert X.data[i + j, j] == a

    def test_columns_merge_to_shifted_value(self, q28):
        a = 0x0ABCDEF1 % q28.q
        X = construct_toeplitz(chunk_decompose(a, 4, 8).data)
        assert X.column_merge() == [a << (8 * j) for j in range(4)]

    def test_empty(self):
        with pytest.raises(ShapeError):
            construct_toeplitz([])

    def test_zero_fraction(self):
        assert construct_toeplitz([4, 3, 2, 1]).zero_fraction == pytest.approx(12 / 28)


class TestFoldAndCarry:
    def test_carry_example(self):
        out = carry_propagate(np.array([[300], [0], [0]]), bp=8)
        assert [int(v) for v in out[:, 0]] == [44, 1, 0]

    def test_carry_needs_width_for_raw_arrays(self):
        with pytest.raises(ConfigurationError):
            carry_propagate(np.array([[1]]))

    def test_fold_clears_bottom_and_keeps_congruence(self, q28):
        a = 123456789 % q28.q
        X = construct_toeplitz(chunk_decompose(a, 4, 8).data)
        folded = bat_fold(X, q28)
        assert not folded.bottom_block.any()
        for j, v in enumerate(folded.column_merge()):
            assert (v - (a << (8 * j))) % q28.q == 0


class TestScalarCompile:
    def test_direct_example(self, q65521):
        M = direct_scalar_bat(3, q65521)
        assert M.matrix.tolist() == [[3, 0], [0, 3]]

    def test_offline_example(self, q65521):
        M = offline_compile_scalar(3, q65521)
        assert M.matrix.tolist() == [[3, 0], [0, 3]]

    @pytest.mark.parametrize('domain', list(Domain))
    def test_compiled_columns_congruent(self, domain, ntt_moduli, rng):
        for m in ntt_moduli:
            for a in random_residues(rng, m.q, 8):
                for compile_fn in (direct_scalar_bat, offline_compile_scalar):
                    M = compile_fn(int(a), m, 8, domain)
                    assert M.matrix.shape == (4, 4)
                    assert int(M.matrix.max()) < 256
                    assert M.is_congruent()

    def test_rejects_non_residue(self, q17):
        with pytest.raises(ParameterRangeError):
            direct_scalar_bat(17, q17)
        with pytest.raises(ParameterRangeError):
            offline_compile_scalar(-1, q17)

    def test_matrix_entries_must_fit(self, q17):
        with pytest.raises(ParameterRangeError):
            BatScalarMatrix(matrix=np.array([[256]]), a=1, modulus=q17)


class TestScalarMulmod:
    @pytest.mark.parametrize('strategy', [ReductionStrategy.NATIVE,
                                          ReductionStrategy.BARRETT64,
                                          ReductionStrategy.MONTGOMERY])
    def test_bat_mulmod(self, strategy, q28, rng):
        a = int(random_residues(rng, q28.q, 1)[0])
        b = random_residues(rng, q28.q, 256)
        M = direct_scalar_bat(a, q28, 8, strategy.domain)
        assert list(bat_scalar_mulmod(M, b, q28, strategy)) == _products(a, b, q28.q)

    def test_scalar_operand(self, q65521):
        M = direct_scalar_bat(300, q65521)
        assert bat_scalar_mulmod(M, 400, q65521) == 300 * 400 % 65521

    def test_sparse_matches(self, q28, rng):
        a = int(random_residues(rng, q28.q, 1)[0])
        b = random_residues(rng, q28.q, 128)
        assert list(sparse_scalar_mulmod(a, b, q28)) == _products(a, b, q28.q)

    def test_op_counts(self, q28, rng):
        a = int(random_residues(rng, q28.q, 1)[0])
        b = random_residues(rng, q28.q, 10)
        dense, sparse = OpCount(), OpCount()
        bat_scalar_mulmod(direct_scalar_bat(a, q28), b, q28, ops=dense)
        sparse_scalar_mulmod(a, b, q28, ops=sparse)
        assert (dense.multiplies, dense.shift_adds, dense.modmuls) == (160, 40, 10)
        assert (sparse.multiplies, sparse.shift_adds, sparse.modmuls) == (280, 70, 10)

    def test_domain_mismatch(self, q28):
        M = direct_scalar_bat(5, q28)
        with pytest.raises(ConfigurationError):
            bat_scalar_mulmod(M, [1], q28, ReductionStrategy.MONTGOMERY)

    def test_modulus_mismatch(self, q17, q28):
        M = direct_scalar_bat(5, q17)
        with pytest.raises(ConfigurationError):
            bat_scalar_mulmod(M, [1], q28)


class TestLazyReduction:
    def test_rows_hold_high_powers(self, q28):
        R = build_lazy_reduction_matrix(q28)
        for k in range(R.K):
            assert R.row_value(k) == pow(2, 8 * (4 + k), q28.q)

    def test_partial_is_congruent(self, q28, rng):
        R = build_lazy_reduction_matrix(q28)
        psum = rng.integers(0, np.iinfo(np.uint64).max, size=200, dtype=np.uint64, endpoint=True)
        partial = lazy_partial_reduce(psum, R)
        for p, z in zip(partial, psum):
            assert (int(p) - int(z)) % q28.q == 0
            assert int(p) < (4 * 256 + 1) << 32

    def test_reduce_matches_mod(self, q28, rng):
        R = build_lazy_reduction_matrix(q28)
        psum = rng.integers(0, 1 << 62, size=200, dtype=np.uint64)
        ops = OpCount()
        got = lazy_reduce64(psum, R, q28, ops=ops)
        assert list(got) == [int(z) % q28.q for z in psum]
        assert ops.multiplies == 200 * 4 * 4

    def test_precondition(self, q65521):
        R = build_lazy_reduction_matrix(q65521)
        with pytest.raises(ParameterRangeError):
            lazy_partial_reduce(1 << 32, R)

    def test_montgomery_rejected(self, q28):
        R = build_lazy_reduction_matrix(q28)
        with pytest.raises(ConfigurationError):
            lazy_reduce64([1], R, q28, ReductionStrategy.MONTGOMERY)


class TestConvolution:
    def test_partials_merge_to_product(self, q28):
        a, b = 0x0FEDCBA9 % q28.q, 0x01234567
        partials = hpsm_conv_partials(a, b, 4)
        assert partials.shape == (7,)
        assert chunk_merge(partials, bp=8) == a * b

    def test_hpsm_matches(self, q28, rng):
        a = random_residues(rng, q28.q, 300)
        b = random_residues(rng, q28.q, 300)
        ops = OpCount()
        got = hpsm_conv(a, b, q28, ops=ops)
        assert list(got) == [int(x) * int(y) % q28.q for x, y in zip(a, b)]
        assert ops.modmuls == 300

    def test_shape_mismatch(self, q28):
        with pytest.raises(ShapeError):
            hpsm_conv([1, 2], [1], q28)

    def test_partials_stay_below_a_word(self, rng):
        m = make_modulus((1 << 31) - 1)
        K = m.chunks(8)
        worst = np.full(64, m.q - 1, dtype=np.uint64)
        assert merge_bound(hpsm_conv_partials(worst, worst, K), 8) < 1 << 64
        a = random_residues(rng, m.q, 500)
        b = random_residues(rng, m.q, 500)
        assert merge_bound(hpsm_conv_partials(a, b, K), 8) < 1 << 64
        assert list(hpsm_conv(a, b, m)) == [int(x) * int(y) % m.q for x, y in zip(a, b)]

    def test_product_bound_skips_element_check(self, q28, rng, monkeypatch):
        from core.application.kernels import modarith

        def no_element_check(data, bp):
            raise AssertionError("per-element merge check ran")

        monkeypatch.setattr(modarith, '_check_merge_exact', no_element_check)
        a = random_residues(rng, q28.q, 100)
        b = random_residues(rng, q28.q, 100)
        assert list(hpsm_conv(a, b, q28)) == [int(x) * int(y) % q28.q for x, y in zip(a, b)]


@pytest.mark.slow
class TestExhaustiveScalarBat:
    @pytest.mark.parametrize('q', [17, 97, 257, 7681])
    def test_every_pair(self, q):
        m = make_modulus(q)
        b = np.arange(q, dtype=np.uint64)
        for a in range(q):
            expected = (np.uint64(a) * b) % np.uint64(q)
            for compile_fn in (direct_scalar_bat, offline_compile_scalar):
                M = compile_fn(a, m)
                assert M.is_congruent()
                assert np.array_equal(bat_scalar_mulmod(M, b, m), expected)

    @pytest.mark.parametrize('strategy', [ReductionStrategy.NATIVE,
                                          ReductionStrategy.BARRETT64,
                                          ReductionStrategy.MONTGOMERY])
    def test_random_pairs_on_generated_primes(self, strategy, ntt_moduli, rng):
        for m in ntt_moduli:
            b = random_residues(rng, m.q, 500)
            for a in random_residues(rng, m.q, 200):
                M = direct_scalar_bat(int(a), m, 8, strategy.domain)
                expected = (int(a) * b.astype(object)) % m.q
                assert list(bat_scalar_mulmod(M, b, m, strategy)) == list(expected)
