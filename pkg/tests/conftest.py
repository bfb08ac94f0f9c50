import numpy as np
import pytest

from dglab.spectral import RealCircleField


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


def random_field(rng, max_mode, scale=1.0, zero_mean=False):
    c = rng.normal(size=2 * max_mode + 1) + 1j * rng.normal(size=2 * max_mode + 1)
    c = 0.5 * (c + np.conj(c[::-1])) * scale
    if zero_mean:
        c[max_mode] = 0.0
    return RealCircleField(c)
