"""Kernel selection: compiled extension when importable, NumPy otherwise.

Set ``TCNOMA_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if not os.environ.get("TCNOMA_PURE_PYTHON"):
    try:
        from . import _kernels_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

walk = _impl.walk
viterbi = _impl.viterbi

__all__ = ["BACKEND", "viterbi", "walk"]
