import numpy as np
import pytest

from singdmc import channel as chmod
from singdmc import kernels


@pytest.fixture
def bec05():
    return chmod.bec(0.5)


@pytest.fixture
def asym():
    return chmod.asym_example()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["pure", "compiled"])
def backend(request):
    if request.param == "compiled":
        if kernels.compiled is None:
            pytest.skip("compiled extension not built")
        return kernels.compiled
    return kernels.pure
