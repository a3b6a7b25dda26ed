"""Selects the compiled kernels when available, else the pure-Python ones.

Set ``DRCBF_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _purepy

compiled = None
if not os.environ.get("DRCBF_PURE_PYTHON"):
    try:
        from . import _core as compiled
    except ImportError:
        compiled = None

kernels = compiled if compiled is not None else _purepy
BACKEND = "cython" if compiled is not None else "python"
