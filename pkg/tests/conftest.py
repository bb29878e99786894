import numpy as np
import pytest

from leanfed import _kernels_py
from leanfed.data import generate_synthetic

try:
    from leanfed import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
if _kernels_c is not None:
    BACKENDS.append(pytest.param(_kernels_c, id="cython"))

ACCEPTANCE_LINES = []


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def small_data():
    return generate_synthetic(num_classes=4, dim=6, n_train=600, n_test=200,
                              class_separation=3.0, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
