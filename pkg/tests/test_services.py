import json

import numpy as np
import pytest

from core.application.services.verification_service import AccumulatorFault
from core.domain.entities.bench import BENCH_KERNELS, RECORD_FIELDS, BenchConfig, BenchRecord
from core.domain.entities.op_count import AccMatrix
from core.domain.entities.reduction_strategy import ReductionStrategy
from core.domain.exceptions import CrossKernelError, UsageError
from core.infrastructure.config.constants import EXIT_OK, EXIT_VERIFY_FAILED
from core.infrastructure.utils.rng import make_rng

SWEEP = [ReductionStrategy.BARRETT64, ReductionStrategy.MONTGOMERY, ReductionStrategy.SHOUP]


@pytest.fixture
def small_set(container):
    return container.param_set_service().load_param_set('custom', degree=64, limbs=3, limbs_out=2)


def _config(param_set, kernel='ntt3', **kwargs):
    kwargs.setdefault('mat_shape', (16, 8, 8))
    kwargs.setdefault('iters', 1)
    kwargs.setdefault('warmup', 0)
    return BenchConfig(kernel=kernel, param_set=param_set, **kwargs)


class TestParamSets:
    def test_named_sets(self, container):
        service = container.param_set_service()
        a = service.load_param_set('A')
        assert (a.N, a.log2q, a.L, a.L_aux) == (4096, 28, 4, 4)
        d = service.load_param_set('d')
        assert (d.N, d.L, d.dnum, d.L_aux) == (65536, 51, 3, 17)

    def test_overrides(self, container):
        ps = container.param_set_service().load_param_set('B', degree=1024, limbs=2)
        assert (ps.name, ps.N, ps.L) == ('B', 1024, 2)

    def test_custom_needs_degree_and_limbs(self, container):
        with pytest.raises(UsageError):
            container.param_set_service().load_param_set('custom', degree=64)

    def test_custom_degree_must_be_power_of_two(self, container):
        with pytest.raises(CrossKernelError):
            container.param_set_service().load_param_set('custom', degree=48, limbs=2)

    def test_unknown_name(self, container):
        with pytest.raises(UsageError):
            container.param_set_service().load_param_set('Z')

    def test_bases_are_disjoint_and_cached(self, container, small_set):
        service = container.param_set_service()
        source, target = service.bases(small_set)
        assert (source.L, target.L) == (3, 2)
        assert not source.overlaps(target)
        assert all(q % 128 == 1 for q in source.q_values + target.q_values)
        assert service.bases(small_set)[0] is source


class TestBenchConfig:
    def test_rc_must_cover_degree(self, small_set):
        with pytest.raises(UsageError):
            _config(small_set, rc=(4, 4))

    @pytest.mark.parametrize('kwargs', [{'batch': [0]}, {'iters': 0}, {'strategies': []},
                                        {'format': 'xml'}, {'warmup': -1}])
    def test_invalid(self, small_set, kwargs):
        with pytest.raises(UsageError):
            _config(small_set, **kwargs)

    def test_unknown_kernel(self, small_set):
        with pytest.raises(UsageError):
            _config(small_set, kernel='fft')

    def test_with_kernel_copies(self, small_set):
        cfg = _config(small_set, batch=[1, 4], seed=7)
        other = cfg.with_kernel('bconv')
        assert other.kernel == 'bconv'
        assert (other.batch, other.seed) == ([1, 4], 7)


class TestVerification:
    @pytest.mark.parametrize('kernel', BENCH_KERNELS)
    def test_every_kernel_is_bit_exact(self, kernel, container, small_set):
        cfg = _config(small_set, kernel, batch=[1, 2], strategies=SWEEP)
        code, results = container.verification_service().run_verify(cfg)
        assert code == EXIT_OK, [r.message for r in results if not r.passed]
        assert all(r.passed for r in results)

    def test_sparse_baseline(self, container, small_set):
        cfg = _config(small_set, 'matmodmul', use_bat=False, strategies=SWEEP)
        code, results = container.verification_service().run_verify(cfg)
        assert code == EXIT_OK
        assert [r.strategy for r in results] == ['barrett64', 'shoup']

    def test_lazyreduce_skips_montgomery(self, container, small_set):
        cfg = _config(small_set, 'lazyreduce', strategies=[ReductionStrategy.MONTGOMERY])
        code, results = container.verification_service().run_verify(cfg)
        assert code == EXIT_OK
        assert [r.strategy for r in results] == ['barrett64']

    def test_injected_fault_is_reported(self, container, small_set):
        cfg = _config(small_set, 'vecmodmul', inject_fault=True)
        code, results = container.verification_service().run_verify(cfg)
        assert code == EXIT_VERIFY_FAILED
        result = results[0]
        assert not result.passed
        assert result.index is not None
        assert result.expected != result.actual
        assert result.expected ^ result.actual < (1 << 16)
        assert result.fault == 'output'
        assert 'index' in json.dumps(result.to_dict())

    @pytest.mark.parametrize('kernel, kwargs', [
        ('matmodmul', {}),
        ('matmodmul', {'use_bat': False}),
        ('ntt3', {}),
        ('intt', {}),
    ])
    def test_fault_lands_in_accumulator(self, kernel, kwargs, container, small_set):
        cfg = _config(small_set, kernel, inject_fault=True, **kwargs)
        code, results = container.verification_service().run_verify(cfg)
        assert code == EXIT_VERIFY_FAILED
        assert all(not r.passed for r in results)
        assert {r.fault for r in results} == {'accumulator'}
        assert all(r.index is not None for r in results)

    def test_parallel_matches_serial(self, container, small_set):
        service = container.verification_service()
        cfg = _config(small_set, 'ntt3', batch=[1, 2], strategies=SWEEP)
        _, serial = service.run_verify(cfg)
        cfg.parallel_verify = True
        code, parallel = service.run_verify(cfg)
        assert code == EXIT_OK
        assert [r.to_dict() for r in parallel] == [r.to_dict() for r in serial]

    def test_all_kernels(self, container, small_set):
        code, results = container.verification_service().run_verify(_config(small_set), True)
        assert code == EXIT_OK
        assert {r.kernel for r in results} == set(BENCH_KERNELS)

    def test_run_error_becomes_failed_cell(self, container, small_set):
        service = container.verification_service()
        cfg = _config(small_set, 'lazyreduce')
        result = service.verify_cell(cfg, 1, ReductionStrategy.MONTGOMERY)
        assert not result.passed
        assert 'plain residues' in result.message

    def test_same_seed_same_inputs(self, container, small_set):
        builder = container.case_builder()
        cfg = _config(small_set, 'vecmodmul', seed=11)
        first = builder.build(cfg, 2, ReductionStrategy.BARRETT64).run(None)
        second = builder.build(cfg, 2, ReductionStrategy.SHOUP).run(None)
        assert np.array_equal(first, second)


class TestBenchmark:
    def test_batch_major_sweep(self, container, small_set):
        cfg = _config(small_set, 'ntt3', batch=[1, 2],
                      strategies=[ReductionStrategy.BARRETT64, ReductionStrategy.SHOUP])
        records = container.benchmark_service().run_benchmark(cfg)
        assert [(r.batch, r.strategy) for r in records] == [
            (1, 'barrett64'), (1, 'shoup'), (2, 'barrett64'), (2, 'shoup'),
        ]
        for r in records:
            assert r.verified
            assert (r.N, r.R, r.C) == (64, 8, 8)
            assert r.throughput_per_s > 0
            assert r.min_us <= r.median_us
            assert r.mults > 0
            assert r.perm_ops == 0

    def test_four_step_counts_permutations(self, container, small_set):
        cfg = _config(small_set, 'four_step', batch=[2])
        record = container.benchmark_service().run_benchmark(cfg)[0]
        assert record.perm_ops == 2 * 64

    def test_dense_plan_multiply_ratio(self, container, small_set):
        service = container.benchmark_service()
        dense = service.run_benchmark(_config(small_set, 'matmodmul'))[0]
        sparse = service.run_benchmark(_config(small_set, 'matmodmul', use_bat=False))[0]
        assert (dense.H, dense.V, dense.W) == (16, 8, 8)
        assert sparse.mults * 4 == dense.mults * 7
        assert dense.verified and sparse.verified

    def test_skip_oracle(self, container, small_set):
        cfg = _config(small_set, 'he_add', check_output=False)
        assert not container.benchmark_service().run_benchmark(cfg)[0].verified

    def test_rns_shapes(self, container, small_set):
        record = container.benchmark_service().run_benchmark(_config(small_set, 'bconv'))[0]
        assert (record.N, record.L, record.Lp) == (64, 3, 2)
        assert record.verified


class TestReports:
    @pytest.fixture
    def records(self):
        return [
            BenchRecord(kernel='ntt3', N=64, R=8, C=8, batch=1, strategy='barrett64',
                        iters=3, min_us=1.5, median_us=2.25, mean_us=2.5,
                        throughput_per_s=400000.0, mults=12288, verified=True,
                        modmuls=1088, label='NTT custom N=64 (8x8)'),
            BenchRecord(kernel='ntt3', N=64, R=8, C=8, batch=2, strategy='shoup',
                        iters=3, min_us=3.0, median_us=3.5, mean_us=4.0,
                        throughput_per_s=500000.0, mults=24576, verified=False),
        ]

    def test_csv_layout(self, container, records, tmp_path):
        path = container.report_service().emit_report(records[:1], 'csv', tmp_path / 'r.csv')
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert lines[0] == ','.join(RECORD_FIELDS)
        assert lines[1].startswith('ntt3,64,8,8,')

    def test_csv_round_trip(self, container, records, tmp_path):
        service = container.report_service()
        path = service.emit_report(records, 'csv', tmp_path / 'r.csv')
        back = service.read_report(path)
        assert [r.to_row() for r in back] == [r.to_row() for r in records]

    def test_json_carries_meta_and_extras(self, container, records, tmp_path):
        service = container.report_service()
        path = service.emit_report(records, 'json', tmp_path / 'r.json', seed=42)
        document = json.loads(path.read_text())
        assert document['meta']['seed'] == 42
        assert document['meta']['columns'] == list(RECORD_FIELDS)
        assert document['records'][0]['modmuls'] == 1088
        assert service.read_report(path) == records

    def test_default_path(self, container, records):
        service = container.report_service()
        path = service.emit_report(records)
        assert path.parent == service.reports_dir
        assert path.suffix == '.csv'

    def test_empty(self, container):
        with pytest.raises(UsageError):
            container.report_service().emit_report([])

    def test_unknown_format(self, container, records):
        with pytest.raises(UsageError):
            container.report_service().emit_report(records, 'xml')



def test_accumulator_fault_flips_one_low_bit():
    acc = AccMatrix(data=np.zeros((4, 4), dtype=np.uint32), K=4, V=1, bp=8)
    fault = AccumulatorFault(make_rng(3, 'fault'))
    fault(acc)
    fault(acc)
    flipped = np.flatnonzero(acc.data)
    assert flipped.size == 1
    value = int(acc.data.reshape(-1)[flipped[0]])
    assert value < 256 and value & (value - 1) == 0
    assert fault.where == tuple(int(i) for i in np.unravel_index(flipped[0], (4, 4)))


@pytest.mark.slow
@pytest.mark.parametrize('kernel', ['ntt3', 'intt', 'bconv', 'rescale'])
def test_set_a_full_size(kernel, container):
    param_set = container.param_set_service().load_param_set('A')
    cfg = _config(param_set, kernel, strategies=SWEEP)
    code, results = container.verification_service().run_verify(cfg)
    assert code == EXIT_OK, [r.message for r in results if not r.passed]
