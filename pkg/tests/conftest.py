import numpy as np
import pytest


@pytest.fixture
def rng():
    """Philox stream so random cases are identical on every platform."""
    return np.random.Generator(np.random.Philox(20240917))


@pytest.fixture
def complex_normal(rng):
    def draw(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return draw
