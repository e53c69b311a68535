import sys
from pathlib import Path

import numpy as np
import pytest

from tcnoma import _kernels_py, kernels
from tcnoma.trellis import build_ungerboeck_4state, psk8

sys.path.insert(0, str(Path(__file__).parent))

BACKENDS = {"python": _kernels_py}
try:
    from tcnoma import _kernels_cy

    BACKENDS["cython"] = _kernels_cy
except ImportError:  # extension not built
    pass


@pytest.fixture
def t4():
    return build_ungerboeck_4state()


@pytest.fixture
def c8():
    return psk8()


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Run a test once per available kernel implementation."""
    impl = BACKENDS[request.param]
    monkeypatch.setattr(kernels, "viterbi", impl.viterbi)
    monkeypatch.setattr(kernels, "walk", impl.walk)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
