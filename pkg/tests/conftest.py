import numpy as np
import pytest

from fedvs.field import MERSENNE_61, PrimeField


@pytest.fixture
def f17():
    return PrimeField(17)


@pytest.fixture
def big():
    return PrimeField(MERSENNE_61)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
