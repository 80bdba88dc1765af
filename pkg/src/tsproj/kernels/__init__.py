"""Kernel backend selection.

Prefers the compiled extension ``tsproj._core``; falls back to the NumPy
implementations when the extension is missing or when the environment
variable ``TSPROJ_PURE_PYTHON`` is set to a non-empty value.
"""

import os

from . import _ref

if os.environ.get("TSPROJ_PURE_PYTHON"):
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from tsproj import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

simulate_core = _impl.simulate_core
residuals_core = _impl.residuals_core
batch_residuals_core = _impl.batch_residuals_core

__all__ = [
    "BACKEND",
    "simulate_core",
    "residuals_core",
    "batch_residuals_core",
]
