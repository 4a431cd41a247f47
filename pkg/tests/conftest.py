import numpy as np
import pytest

from sweepout import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per available kernel backend."""
    with kernels.backend_scope(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
