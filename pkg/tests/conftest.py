import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_image(rng, h, w, smooth=False):
    x = rng.uniform(0.0, 1.0, (h, w))
    if smooth:
        box = np.ones((3, 3)) / 9.0
        from eqpnp.denoisers import _conv_circ_small

        x = _conv_circ_small(x, box)
    return x
