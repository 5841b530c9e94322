"""Backend selection for the numeric kernels.

Set ``PROMPTWEIGHT_BACKEND=numpy`` to force the pure-numpy path, or
``PROMPTWEIGHT_BACKEND=numba`` to require the jitted path (raises if numba
is unavailable). The default ``auto`` uses numba when it imports cleanly.
Both paths compute the same quantities; the integer PRNG stream is
bit-identical across them, the float kernels agree to rounding error.
"""

import os

_ENV_VAR = "PROMPTWEIGHT_BACKEND"
_requested = os.environ.get(_ENV_VAR, "auto").strip().lower()

if _requested not in {"auto", "numba", "numpy"}:
    raise RuntimeError(
        f"{_ENV_VAR} must be one of auto|numba|numpy, got {_requested!r}"
    )

if _requested == "numpy":
    from . import _kernels_numpy as _impl

    _BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl

        _BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        from . import _kernels_numpy as _impl

        _BACKEND = "numpy"


def active_backend() -> str:
    """Name of the kernel backend in use: 'numba' or 'numpy'."""
    return _BACKEND


PROB_EPS = _impl.PROB_EPS

softmax_rows = _impl.softmax_rows
row_entropies = _impl.row_entropies
row_cross_entropies = _impl.row_cross_entropies
weighted_logits_flat = _impl.weighted_logits_flat
contribution_scores_flat = _impl.contribution_scores_flat
xoshiro_fill = _impl.xoshiro_fill
