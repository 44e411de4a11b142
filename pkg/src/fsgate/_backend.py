"""Select the numerical kernel backend at import time.

The compiled extension is preferred; set ``FSGATE_PURE_PYTHON=1`` to force
the numpy fallback.
"""

import os

from fsgate import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("FSGATE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from fsgate import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"


def available_backends():
    """Map of backend name to kernel module, for benchmarks and tests."""
    out = {"python": _pykernels}
    try:
        from fsgate import _ckernels
    except ImportError:
        return out
    out["cython"] = _ckernels
    return out
