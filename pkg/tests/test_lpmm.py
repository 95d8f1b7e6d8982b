import numpy as np
import pytest

from core.application.kernels.bat import offline_compile_left, offline_compile_right
from core.application.kernels.lpmm import (
    accumulator_bits,
    mat_mod_mul,
    mat_mod_mul_right,
    matmul_lp,
    merge_reduce,
    mxu_utilization,
    reference_mat_mod_mul,
    sparse_baseline_matmul,
)
from core.domain.entities.bat_matrices import BatMatPlan
from core.domain.entities.op_count import OpCount
from core.domain.entities.reduction_strategy import Domain, ReductionStrategy
from core.domain.exceptions import ConfigurationError, PrecisionError, ShapeError
from core.infrastructure.utils.rng import random_residues
from core.infrastructure.utils.worker_pool import WorkerPool


@pytest.fixture
def pool():
    p = WorkerPool(num_workers=2, name="Test")
    yield p
    p.cleanup()


def test_accumulator_bits():
    assert accumulator_bits(8, 256) == 24
    assert accumulator_bits(8, 1) == 16


def test_mxu_utilization():
    assert mxu_utilization(128, 128, 128) == 1.0
    assert mxu_utilization(64, 128, 128) == 0.5


class TestMatmulLp:
    def test_exact_product(self, rng):
        A = rng.integers(0, 256, size=(20, 30), dtype=np.uint8)
        B = rng.integers(0, 256, size=(30, 10), dtype=np.uint8)
        acc = matmul_lp(A, B)
        assert acc.data.dtype == np.uint32
        expected = A.astype(np.int64) @ B.astype(np.int64)
        assert np.array_equal(acc.data.astype(np.int64), expected)

    def test_accumulator_overflow(self):
        A = np.zeros((1, 65537), dtype=np.uint8)
        B = np.zeros((65537, 1), dtype=np.uint8)
        with pytest.raises(PrecisionError):
            matmul_lp(A, B)

    def test_operand_too_wide(self):
        with pytest.raises(PrecisionError):
            matmul_lp(np.array([[256]]), np.array([[1]]))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            matmul_lp(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_row_blocks_on_pool(self, pool, rng):
        A = rng.integers(0, 256, size=(600, 40), dtype=np.uint8)
        B = rng.integers(0, 256, size=(40, 8), dtype=np.uint8)
        ops = OpCount()
        acc = matmul_lp(A, B, ops=ops, pool=pool)
        assert np.array_equal(acc.data, matmul_lp(A, B).data)
        assert ops.multiplies == 600 * 40 * 8


class TestMatModMul:
    @pytest.mark.parametrize('strategy', ReductionStrategy.matrix_strategies())
    def test_left_plan(self, strategy, ntt_moduli, rng):
        for m in ntt_moduli:
            A = random_residues(rng, m.q, (12, 9))
            B = random_residues(rng, m.q, (9, 7))
            got = mat_mod_mul(A, B, m, strategy=strategy)
            assert np.array_equal(got, reference_mat_mod_mul(A, B, m))

    @pytest.mark.parametrize('strategy', ReductionStrategy.matrix_strategies())
    def test_right_plan(self, strategy, q28, rng):
        X = random_residues(rng, q28.q, (5, 16))
        B = random_residues(rng, q28.q, (16, 11))
        got = mat_mod_mul_right(X, B, q28, strategy=strategy)
        assert np.array_equal(got, reference_mat_mod_mul(X, B, q28))

    def test_wide_chunks(self, q28, rng):
        A = random_residues(rng, q28.q, (4, 4))
        B = random_residues(rng, q28.q, (4, 4))
        got = mat_mod_mul(A, B, q28, bp=4)
        assert np.array_equal(got, reference_mat_mod_mul(A, B, q28))

    def test_plan_reuse_and_counts(self, q28, rng):
        A = random_residues(rng, q28.q, (8, 6))
        plan = offline_compile_left(A, q28)
        assert plan.A_dense.shape == (32, 24)
        ops = OpCount()
        for _ in range(2):
            B = random_residues(rng, q28.q, (6, 5))
            got = mat_mod_mul(None, B, q28, plan=plan, ops=ops)
            assert np.array_equal(got, reference_mat_mod_mul(A, B, q28))
        assert ops.multiplies == 2 * 32 * 24 * 5
        assert ops.modmuls == 2 * 8 * 6 * 5

    def test_plan_domain_mismatch(self, q28, rng):
        A = random_residues(rng, q28.q, (2, 2))
        plan = offline_compile_left(A, q28, domain=Domain.PLAIN)
        with pytest.raises(ConfigurationError):
            mat_mod_mul(None, A, q28, strategy=ReductionStrategy.MONTGOMERY, plan=plan)

    def test_plan_side_mismatch(self, q28, rng):
        A = random_residues(rng, q28.q, (3, 3))
        plan = offline_compile_right(A, q28)
        with pytest.raises(ConfigurationError):
            mat_mod_mul(None, A, q28, plan=plan)

    def test_inner_dimension_mismatch(self, q28, rng):
        A = random_residues(rng, q28.q, (3, 4))
        with pytest.raises(ShapeError):
            mat_mod_mul(A, random_residues(rng, q28.q, (3, 2)), q28)

    def test_merge_reduce_layout(self, q17):
        with pytest.raises(ConfigurationError):
            merge_reduce(np.zeros((2, 2)), 1, q17, chunks_along='diagonal')


class TestSparseBaseline:
    def test_matches_reference(self, q28, rng):
        A = random_residues(rng, q28.q, (10, 8))
        B = random_residues(rng, q28.q, (8, 6))
        got, _ = sparse_baseline_matmul(A, B, q28)
        assert np.array_equal(got, reference_mat_mod_mul(A, B, q28))

    def test_dense_plan_saves_a_quarter_of_multiplies(self, q28, rng):
        A = random_residues(rng, q28.q, (16, 16))
        B = random_residues(rng, q28.q, (16, 16))
        dense = OpCount()
        mat_mod_mul(A, B, q28, ops=dense)
        _, sparse = sparse_baseline_matmul(A, B, q28)
        assert sparse.multiplies * 4 == dense.multiplies * 7

    def test_sparse_lhs_is_seven_quarters(self, q28, rng):
        A = random_residues(rng, q28.q, (32, 24))
        B = random_residues(rng, q28.q, (24, 8))
        dense = OpCount()
        mat_mod_mul(A, B, q28, ops=dense)
        _, sparse = sparse_baseline_matmul(A, B, q28)
        assert sparse.multiplies / dense.multiplies == pytest.approx(1.75)
        assert sparse.bytes_lhs / dense.bytes_lhs == pytest.approx(1.75)

    def test_plain_domain_only(self, q28):
        with pytest.raises(ConfigurationError):
            sparse_baseline_matmul([[1]], [[1]], q28, strategy=ReductionStrategy.MONTGOMERY)


@pytest.mark.slow
class TestFullTiles:
    SHAPES = [(512, 256, 256), (1024, 256, 256)]

    @staticmethod
    def _oracle(A, B, m):
        # (q-1)^2 * 256 stays below 2^64 for 28-bit q
        return (A.astype(np.uint64) @ B.astype(np.uint64)) % np.uint64(m.q)

    @pytest.mark.parametrize('shape', SHAPES)
    @pytest.mark.parametrize('strategy', ReductionStrategy.matrix_strategies())
    def test_left_plan(self, shape, strategy, q28, pool, rng):
        H, V, W = shape
        A = random_residues(rng, q28.q, (H, V))
        B = random_residues(rng, q28.q, (V, W))
        ops = OpCount()
        got = mat_mod_mul(A, B, q28, strategy=strategy, ops=ops, pool=pool)
        assert np.array_equal(got, self._oracle(A, B, q28))
        assert ops.mxu_utilization == 1.0
        assert ops.modmuls == H * V * W

    @pytest.mark.parametrize('shape', SHAPES)
    def test_right_plan(self, shape, q28, rng):
        H, V, W = shape
        X = random_residues(rng, q28.q, (W, V))
        B = random_residues(rng, q28.q, (V, H))
        got = mat_mod_mul_right(X, B, q28)
        assert np.array_equal(got, self._oracle(X, B, q28))

    @pytest.mark.parametrize('shape', SHAPES)
    def test_sparse_baseline(self, shape, q28, rng):
        H, V, W = shape
        A = random_residues(rng, q28.q, (H, V))
        B = random_residues(rng, q28.q, (V, W))
        dense = OpCount()
        expected = mat_mod_mul(A, B, q28, ops=dense)
        got, sparse = sparse_baseline_matmul(A, B, q28)
        assert np.array_equal(got, expected)
        assert sparse.multiplies / dense.multiplies == pytest.approx(1.75)
        assert sparse.bytes_lhs / dense.bytes_lhs == pytest.approx(1.75)


class TestPlanSerialization:
    def test_round_trip(self, q28, rng):
        plan = offline_compile_left(random_residues(rng, q28.q, (3, 5)), q28,
                                    domain=Domain.MONTGOMERY)
        back = BatMatPlan.from_bytes(plan.to_bytes())
        assert np.array_equal(back.A_dense, plan.A_dense)
        assert (back.H, back.V, back.K, back.bp) == (3, 5, 4, 8)
        assert back.domain is Domain.MONTGOMERY
        assert back.modulus.q == q28.q
