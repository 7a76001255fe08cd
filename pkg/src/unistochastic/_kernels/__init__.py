"""Phase-completion kernels: compiled extension with a NumPy fallback.

The compiled ``_lm`` module is used when importable. Setting the environment
variable ``UNISTOCHASTIC_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _lm_py

if os.environ.get("UNISTOCHASTIC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _lm_py
    BACKEND = "python"
else:
    try:
        from . import _lm as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _lm_py
        BACKEND = "python"

lm_multistart = _impl.lm_multistart
residual_jacobian = _impl.residual_jacobian
#: Whether ``lm_multistart`` releases the GIL (splitting starts over threads helps).
RELEASES_GIL = BACKEND == "compiled"

__all__ = ["BACKEND", "RELEASES_GIL", "lm_multistart", "residual_jacobian", "_lm_py"]
