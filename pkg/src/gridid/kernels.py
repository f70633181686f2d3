"""Kernel dispatch: the compiled extension when importable, else pure Python.

Set ``GRIDID_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("GRIDID_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

scatter_add_blocks = _impl.scatter_add_blocks
cd_weighted_l1 = _impl.cd_weighted_l1

__all__ = ["BACKEND", "scatter_add_blocks", "cd_weighted_l1"]
