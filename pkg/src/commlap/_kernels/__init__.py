"""Hot inner loops. The compiled extensions are used when they were built;
set ``COMMLAP_PURE_PYTHON=1`` to force the fallback."""
import os

from . import _jacobi_py

BACKEND = "python"
jacobi_sweep = _jacobi_py.jacobi_sweep
# None selects the dense numpy evaluation of the CCO cost and gradient
CommutatorKernel = None

if not os.environ.get("COMMLAP_PURE_PYTHON"):
    try:
        from ._commutator import CommutatorKernel  # noqa: F811
        from ._jacobi import jacobi_sweep  # noqa: F811
    except ImportError:
        CommutatorKernel = None
        jacobi_sweep = _jacobi_py.jacobi_sweep
    else:
        BACKEND = "cython"

__all__ = ["BACKEND", "CommutatorKernel", "jacobi_sweep"]
