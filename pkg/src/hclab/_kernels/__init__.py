"""Hot inner loops with a compiled implementation and a NumPy fallback.

The compiled module is used when it imports; set ``HC_LAB_PURE_PYTHON=1`` to
force the fallback.  ``BACKEND`` names the implementation in use.
"""
import os

from . import _pykernels as python

try:
    if os.environ.get("HC_LAB_PURE_PYTHON") == "1":
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

propagate = _impl.propagate
ball_mask = _impl.ball_mask
weight_worst_log_ratio = _impl.weight_worst_log_ratio

__all__ = ["BACKEND", "compiled", "python", "propagate", "ball_mask", "weight_worst_log_ratio"]
