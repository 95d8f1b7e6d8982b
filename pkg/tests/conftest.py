"""Shared fixtures: small moduli, generated NTT primes, seeded streams"""

import pytest

from core.application.kernels.modarith import gen_ntt_primes, make_modulus
from core.container.container import Container
from core.infrastructure.utils.rng import make_rng

SMALL_PRIMES = (17, 97, 257, 7681)


@pytest.fixture(scope="session")
def small_moduli():
    return [make_modulus(q) for q in SMALL_PRIMES]


@pytest.fixture(scope="session")
def q17():
    return make_modulus(17)


@pytest.fixture(scope="session")
def q65521():
    return make_modulus(65521)


@pytest.fixture(scope="session")
def ntt_moduli():
    """Three 28-bit primes that support negacyclic NTTs up to N=4096"""
    return [make_modulus(q) for q in gen_ntt_primes(28, 4096, 3)]


@pytest.fixture(scope="session")
def q28(ntt_moduli):
    return ntt_moduli[0]


@pytest.fixture
def rng(request):
    return make_rng(2024, request.node.name)


@pytest.fixture
def container(tmp_path, monkeypatch):
    """Container rooted in a temporary home directory"""
    monkeypatch.setenv('CROSS_KERNELS_HOME', str(tmp_path / 'home'))
    monkeypatch.setenv('CROSS_KERNELS_THREADS', '2')
    c = Container()
    c.init_resources()
    yield c
    c.cleanup()
