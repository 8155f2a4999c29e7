"""Kernel backend selection.

The compiled extension ``sfnet._kernels`` is used when it imports; otherwise
the numpy versions in ``sfnet._kernels_py`` are used. Setting
``SFNET_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("SFNET_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined,no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

scatter_add_rows = _impl.scatter_add_rows
midrank_positive_sum = _impl.midrank_positive_sum
roc_staircase = _impl.roc_staircase
top_k_hits = _impl.top_k_hits

__all__ = [
    "BACKEND",
    "scatter_add_rows",
    "midrank_positive_sum",
    "roc_staircase",
    "top_k_hits",
]
