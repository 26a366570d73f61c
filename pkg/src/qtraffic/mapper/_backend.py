"""Select the refinement kernel: compiled extension if importable, else pure Python.

Set ``QTRAFFIC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _refine_py

python_refine = _refine_py.refine

try:
    if os.environ.get("QTRAFFIC_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend forced")
    from ._refine import refine as compiled_refine
except ImportError:
    compiled_refine = None

if compiled_refine is not None:
    refine = compiled_refine
    BACKEND = "cython"
else:
    refine = python_refine
    BACKEND = "python"
