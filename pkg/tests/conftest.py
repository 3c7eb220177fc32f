import numpy as np
import pytest

from toda.lattice import FreeBackground, JacobiCoefficients


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_compact_perturbation(rng, lo=-3, size=5):
    """Free lattice with a random window of modest coefficients."""
    return JacobiCoefficients(
        lo,
        tuple(0.6 + 0.8 * rng.random(size)),
        tuple(0.8 * rng.standard_normal(size)),
        FreeBackground(),
    )
