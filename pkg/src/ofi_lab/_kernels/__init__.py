"""Kernel backend selection.

The compiled extension is used when importable; set ``OFI_LAB_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _pykernels as python_backend
from ._pykernels import LAW_BERNOULLI, LAW_CONSTANT, LAW_EXPONENTIAL, LAW_UNIFORM

compiled_backend = None
if not os.environ.get("OFI_LAB_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

__all__ = [
    "BACKEND",
    "LAW_BERNOULLI",
    "LAW_CONSTANT",
    "LAW_EXPONENTIAL",
    "LAW_UNIFORM",
    "backend",
    "compiled_backend",
    "python_backend",
]
