import numpy as np
import pytest

from gammafit.crystal import build_crystal

C4 = [np.linalg.matrix_power(np.array([[0, -1], [1, 0]]), k) for k in range(4)]


def line_instance():
    return build_crystal(12, 1, [[3]], [[[1]], [[-1]]])


def square_instance(step=2):
    return build_crystal(8, 2, [[step, 0], [0, step]], C4)


def random_signals(crystal, n, rng):
    shape = crystal.spec.shape
    return [rng.normal(size=shape) + 1j * rng.normal(size=shape) for _ in range(n)]


@pytest.fixture(scope="session")
def line():
    return line_instance()


@pytest.fixture(scope="session")
def square():
    return square_instance()


@pytest.fixture(scope="session")
def square_fine():
    return square_instance(4)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
