"""Import-time selection between the compiled and pure-Python kernels.

Set ``WAVESPEED_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as py

kernels = py
BACKEND = "python"

if os.environ.get("WAVESPEED_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _c
    except ImportError:
        pass
    else:
        kernels = _c
        BACKEND = "cython"
