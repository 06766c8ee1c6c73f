"""Hot-loop kernels with a compiled core and a numpy fallback.

The compiled extension is used when importable unless the environment
variable ``SINGDMC_PURE_PYTHON`` is set to a non-empty value.
"""
import os

from . import _pykernels as pure

compiled = None
if not os.environ.get("SINGDMC_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

backend = compiled if compiled is not None else pure
BACKEND_NAME = "cython" if compiled is not None else "python"

compositions = backend.compositions
composition_terms = backend.composition_terms
iid_tail = backend.iid_tail
product_tail = backend.product_tail
ml_error = backend.ml_error

__all__ = ["BACKEND_NAME", "backend", "compiled", "pure", "compositions",
           "composition_terms", "iid_tail", "product_tail", "ml_error"]
