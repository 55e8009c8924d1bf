"""Backend selection for the hot kernels.

The compiled extension ``leray._kernels`` is used when it imports; otherwise
the numpy implementation in ``leray._kernels_py``.  Setting LERAY_BACKEND=python
forces the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"

if os.environ.get("LERAY_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]

        _impl = _compiled
        BACKEND = "compiled"
    except ImportError:  # extension not built
        pass


def leray_density(theta, dtheta, pre, post):
    return _impl.leray_density(theta, dtheta, pre, post)


def backend() -> str:
    return BACKEND


def cf_density(e, de, w, dz, pre, A=None, dA=None, mu0=None, dmu0=None, normalize=True):
    return _impl.cf_density(e, de, w, dz, pre, A, dA, mu0, dmu0, normalize)
