"""Select the compiled kernels when importable, else the numpy fallback.

Set ``UMP_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("UMP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_kernels(name=None):
    """Return the kernel module by name (``"cython"``/``"python"``), or the
    active one when ``name`` is None."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
