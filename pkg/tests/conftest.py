from functools import lru_cache

import pytest

from twistvoa.examples import build
from twistvoa.rewrite import ModeAlgebra


@lru_cache(maxsize=None)
def instance(name: str, cutoff: int = 0):
    return build(name, cutoff)


@lru_cache(maxsize=None)
def algebra(name: str, cutoff: int):
    return ModeAlgebra(instance(name, cutoff).W)


@pytest.fixture(scope="session")
def fock6():
    return instance("twisted_fock", 6)


@pytest.fixture(scope="session")
def lattice6():
    return instance("lattice_sqrt2", 6)


@pytest.fixture(scope="session")
def unipotent3():
    return instance("unipotent_fragment", 3)


@pytest.fixture(scope="session")
def trivial():
    return instance("trivial")


@pytest.fixture(scope="session")
def lattice_alg6():
    return algebra("lattice_sqrt2", 6)


@pytest.fixture(scope="session")
def fock_alg6():
    return algebra("twisted_fock", 6)
