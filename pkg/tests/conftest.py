import numpy as np
import pytest

from ofi_lab import _kernels


def kernel_backends():
    out = [pytest.param(_kernels.python_backend, id="python")]
    if _kernels.compiled_backend is not None:
        out.append(pytest.param(_kernels.compiled_backend, id="compiled"))
    return out


@pytest.fixture(params=kernel_backends())
def kb(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
