"""Backend selection for the numeric hot loops.

The compiled Cython module is used when importable. Set the environment
variable ``FMRBENCH_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

if os.environ.get("FMRBENCH_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

lasso_cd = _impl.lasso_cd
jacobi_svd = _impl.jacobi_svd

__all__ = ["BACKEND", "lasso_cd", "jacobi_svd"]
