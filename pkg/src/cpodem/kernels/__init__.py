"""Hot numerical kernels with a compiled fast path.

The Cython extension `_native` is built at install time when a compiler is
available; otherwise (or when CPODEM_PURE=1 is set) the numpy fallback in
`pure` is used. Both lanes implement the same functions with the same
semantics; `BACKEND` records which one is active.
"""

import os

if os.environ.get("CPODEM_PURE"):
    from . import pure as _impl

    BACKEND = "python"
else:
    try:
        from . import _native as _impl

        BACKEND = "cython"
    except ImportError:
        from . import pure as _impl

        BACKEND = "python"

maxpro_pair_sum = _impl.maxpro_pair_sum
anneal_lhd = _impl.anneal_lhd
idw_apply = _impl.idw_apply
gaussian_corr = _impl.gaussian_corr

__all__ = ["BACKEND", "maxpro_pair_sum", "anneal_lhd", "idw_apply", "gaussian_corr"]
