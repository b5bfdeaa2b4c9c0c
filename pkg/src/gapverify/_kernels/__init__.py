"""Pairwise kernels with a compiled backend and a numpy fallback.

The compiled module is used when it was built and ``GAPVERIFY_PURE_PYTHON``
is unset; ``BACKEND`` names the active implementation.
"""
import os

import numpy as np

from . import _pairs_py

if os.environ.get("GAPVERIFY_PURE_PYTHON"):
    _impl = _pairs_py
    BACKEND = "python"
else:
    try:
        from . import _pairs as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pairs_py
        BACKEND = "python"


def _prep(lattice, vec, I, J):
    return (np.ascontiguousarray(lattice, dtype=np.int64),
            np.ascontiguousarray(vec, dtype=np.float64),
            np.ascontiguousarray(I, dtype=np.int64),
            np.ascontiguousarray(J, dtype=np.int64))


def pair_projection(lattice, vec, I, J, h, impl=None):
    """``(X_j - X_i) . u`` and squared lattice separation for each pair (row indices)."""
    return (impl or _impl).pair_projection(*_prep(lattice, vec, I, J), float(h))


def tan_slack(lattice, vec, I, J, h, a, impl=None):
    """Projection minus ``2 a tan(a r / 2)`` for each pair, with ``r = h |d|``."""
    return (impl or _impl).tan_slack(*_prep(lattice, vec, I, J), float(h), float(a))


def ratio_max(lattice, w, h, a, impl=None):
    """Max over pairs of ``(w_j - w_i) / (2 sin(a r / 2))``; returns ``(value, i, j)``."""
    lat = np.ascontiguousarray(lattice, dtype=np.int64)
    return (impl or _impl).ratio_max(lat, np.ascontiguousarray(w, dtype=np.float64),
                                     float(h), float(a))
