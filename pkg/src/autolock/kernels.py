"""Kernel backend selection.

The compiled extension is used when it was built; set
``AUTOLOCK_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
link_features = _kernels_py.link_features

if not os.environ.get("AUTOLOCK_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        link_features = _kernels.link_features

py_link_features = _kernels_py.link_features
