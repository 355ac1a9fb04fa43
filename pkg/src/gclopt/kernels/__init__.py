"""Backend selection for the Hadamard-form volume kernels.

The environment variable ``GCLOPT_BACKEND`` picks the implementation:
``numba`` (default when importable) or ``numpy`` (pure-vectorized
fallback, bit-compatible results).  Both expose the same functions:

    euler_volume(q, a, D1, D2, D3, dims, gamma, R) -> out

with ``q`` of shape (K, N, 5), metric terms ``a`` of shape (K, 3, 3, N)
and the 1-D derivative matrices per direction.
"""

from __future__ import annotations

import os

_requested = os.environ.get("GCLOPT_BACKEND", "").strip().lower()
if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"GCLOPT_BACKEND={_requested!r} not recognized (use 'numba' or 'numpy')"
    )

if _requested == "numpy":
    from . import _numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _numba as _impl

        BACKEND = "numba"
    except ImportError:
        if _requested == "numba":
            raise
        from . import _numpy as _impl

        BACKEND = "numpy"

euler_volume = _impl.euler_volume


def set_threads(n: int) -> None:
    """Limit the number of kernel threads (no-op on the numpy backend)."""
    if BACKEND == "numba":
        import numba

        numba.set_num_threads(max(1, int(n)))
