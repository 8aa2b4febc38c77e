"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``QCOOL_PURE_PYTHON=1``
to force the numpy/scipy fallback.
"""
import os

from qcool import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("QCOOL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from qcool import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

hermite_table = _impl.hermite_table
CNStepper = _impl.CNStepper


def available_backends():
    """Map backend name to kernel module for every importable backend."""
    found = {"python": _pykernels}
    try:
        from qcool import _ckernels

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
