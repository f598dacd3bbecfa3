"""Pick the compiled kernel when it imports, else the pure-Python loops.

Set ``AOIQ_BACKEND=python`` to force the fallback.
"""
import os

from . import _pykernels

try:
    if os.environ.get("AOIQ_BACKEND", "").lower() == "python":
        raise ImportError("compiled kernel disabled by AOIQ_BACKEND")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

KERNELS = {"python": _pykernels.run_kernel}
if _compiled is not None:
    KERNELS["cython"] = _compiled.run_kernel

DEFAULT_BACKEND = "cython" if _compiled is not None else "python"


def get_kernel(backend=None):
    name = backend or DEFAULT_BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(KERNELS)}") from None
