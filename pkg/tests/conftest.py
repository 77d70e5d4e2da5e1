import numpy as np
import pytest

from dualmink.sphere import build_grid


@pytest.fixture(scope="session")
def circle64():
    return build_grid(1, 64)


@pytest.fixture(scope="session")
def circle256():
    return build_grid(1, 256)


@pytest.fixture(scope="session")
def sphere16():
    return build_grid(2, (16, 32))


@pytest.fixture(scope="session")
def sphere32():
    return build_grid(2, (32, 64))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
