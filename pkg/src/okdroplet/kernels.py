"""Kernel backend selection.

The compiled Cython extension is used when it was built; otherwise, or when
``OKDROPLET_PURE_PYTHON=1`` is set, the numpy implementation is used.  Both
expose ``pair_sums``, ``cross_sum``, ``unit_log_ratio`` and ``brent_b1`` with
identical contracts.  The inverse-distance sums agree to rounding, not
bitwise; the root solve takes the same steps in both.
"""
import os

from . import _pykernels

python_backend = _pykernels

try:
    if os.environ.get("OKDROPLET_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure python backend forced")
    from . import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

pair_sums = backend.pair_sums
cross_sum = backend.cross_sum
unit_log_ratio = backend.unit_log_ratio
brent_b1 = backend.brent_b1
