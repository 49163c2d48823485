import numpy as np
import pytest

import orlext as ox


@pytest.fixture(scope="session")
def unit_square_64():
    return ox.square_domain(1 / 64)


@pytest.fixture(scope="session")
def unit_square_256():
    return ox.square_domain(1 / 256)


@pytest.fixture(scope="session")
def disk_32():
    return ox.disk_domain(1 / 32)


@pytest.fixture(scope="session")
def lshape_24():
    return ox.l_shape_domain(1 / 24)


@pytest.fixture(scope="session")
def dumbbell_005():
    return ox.dumbbell_domain(0.05)


@pytest.fixture(scope="session")
def dumbbell_01():
    return ox.dumbbell_domain(0.1)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
