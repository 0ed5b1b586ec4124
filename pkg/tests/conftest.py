import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fmrbench import _kernels_py  # noqa: E402

try:
    from fmrbench import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_py, id="python"),
            pytest.param(_kernels_c, id="cython",
                         marks=pytest.mark.skipif(_kernels_c is None, reason="extension not built"))]


@pytest.fixture(params=BACKENDS)
def kernel(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def standardized(rng, n, p):
    X = rng.standard_normal((n, p))
    return (X - X.mean(0)) / X.std(0, ddof=1)
