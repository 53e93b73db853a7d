import numpy as np
import pytest

from smaplab.grid import make_grid


@pytest.fixture
def grid32():
    return make_grid(32, 12.0)


@pytest.fixture
def grid64():
    return make_grid(64, 20.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def smooth_random(grid, rng, decay=4.0):
    """Random complex field with Gaussian-decaying spectrum."""
    hat = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    return np.fft.ifft2(hat * np.exp(-grid.ksq / decay))
