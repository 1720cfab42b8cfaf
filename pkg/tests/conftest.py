import numpy as np
import pytest

from spincat.spinops import D52, GROUND


@pytest.fixture
def d52():
    return D52


@pytest.fixture
def ground():
    return GROUND


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.real(np.trace(rho))
