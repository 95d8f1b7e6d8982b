import numpy as np
import pytest

from core.application.kernels.bat import offline_compile_left
from core.application.kernels.rnsconv import make_basis
from core.domain.entities.bat_matrices import BatMatPlan
from core.domain.entities.rns import RnsPoly
from core.domain.exceptions import SerializationError
from core.infrastructure.cache.plan_cache import PlanCache
from core.infrastructure.config.app_config import AppConfig
from core.infrastructure.persistence.local_plan_repository import LocalPlanRepository
from core.infrastructure.utils.rng import random_limbs, random_residues


@pytest.fixture
def repository(tmp_path):
    return LocalPlanRepository(AppConfig.create_default(tmp_path))


@pytest.fixture
def plan(q28, rng):
    return offline_compile_left(random_residues(rng, q28.q, (4, 3)), q28)


class TestBatpContainer:
    def test_bad_magic(self, plan):
        data = bytearray(plan.to_bytes())
        data[:4] = b'XXXX'
        with pytest.raises(SerializationError):
            BatMatPlan.from_bytes(bytes(data))

    def test_truncated_payload(self, plan):
        with pytest.raises(SerializationError):
            BatMatPlan.from_bytes(plan.to_bytes()[:-1])

    def test_short_header(self):
        with pytest.raises(SerializationError):
            BatMatPlan.from_bytes(b'BATP')

    def test_wide_chunks(self, q28, rng):
        plan = offline_compile_left(random_residues(rng, q28.q, (2, 2)), q28, bp=16)
        back = BatMatPlan.from_bytes(plan.to_bytes())
        assert back.A_dense.dtype == np.uint16
        assert np.array_equal(back.A_dense, plan.A_dense)


class TestRnspContainer:
    def test_round_trip(self, rng):
        basis = make_basis(28, 16, 3)
        p = RnsPoly(limbs=random_limbs(rng, basis.q_values, 16), basis=basis)
        assert RnsPoly.from_bytes(p.to_bytes(), basis) == p

    def test_wrong_basis(self, rng):
        basis = make_basis(28, 16, 3)
        other = make_basis(28, 16, 3, exclude=basis.q_values)
        p = RnsPoly(limbs=random_limbs(rng, basis.q_values, 16), basis=basis)
        with pytest.raises(SerializationError):
            RnsPoly.from_bytes(p.to_bytes(), other)


class TestLocalPlanRepository:
    def test_save_load(self, repository, plan):
        assert repository.save('abc', plan)
        assert repository.exists('abc')
        assert repository.list_keys() == ['abc']
        loaded = repository.load('abc')
        assert np.array_equal(loaded.A_dense, plan.A_dense)
        assert repository.total_bytes() > 0

    def test_missing(self, repository):
        assert repository.load('nope') is None
        assert not repository.delete('nope')

    def test_malformed_file_is_discarded(self, repository):
        (repository.plans_dir / 'bad.batp').write_bytes(b'garbage')
        assert repository.load('bad') is None
        assert not repository.exists('bad')


class TestPlanCache:
    def test_compile_once(self, plan):
        cache = PlanCache()
        calls = []

        def compile_fn():
            calls.append(1)
            return plan

        assert cache.get_or_compile('k', compile_fn) is plan
        assert cache.get_or_compile('k', compile_fn) is plan
        assert len(calls) == 1
        assert cache.stats()['hits'] == 1
        assert cache.stats()['misses'] == 1

    def test_write_through_and_reload(self, repository, plan):
        PlanCache(repository).put('k', plan)
        fresh = PlanCache(repository)
        loaded = fresh.get('k')
        assert np.array_equal(loaded.A_dense, plan.A_dense)
        assert len(fresh) == 1

    def test_non_bat_plans_stay_in_memory(self, repository):
        cache = PlanCache(repository)
        cache.put('lazy', object())
        assert not repository.exists('lazy')

    def test_eviction(self, plan):
        cache = PlanCache(max_size_mb=0)
        cache.put('a', plan)
        cache.put('b', plan)
        assert len(cache) == 1
        assert cache.get('a') is None

    def test_disabled(self, plan):
        cache = PlanCache(enabled=False)
        cache.put('k', plan)
        assert cache.get('k') is None

    def test_invalidate(self, repository, plan):
        cache = PlanCache(repository)
        cache.put('k', plan)
        cache.invalidate('k')
        assert cache.get('k') is None
        assert not repository.exists('k')
