"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set TRAJSEARCH_PURE=1 to force the pure-Python backend (used by the
benchmark to compare the two).
"""

import os

from . import kernels_py

if os.environ.get("TRAJSEARCH_PURE") == "1":
    _impl = kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = kernels_py
        BACKEND = "python"

min_dist_scan = _impl.min_dist_scan
history_scan = _impl.history_scan
nearest_point_scan = _impl.nearest_point_scan

__all__ = ["min_dist_scan", "history_scan", "nearest_point_scan", "BACKEND", "kernels_py"]
