"""Kernel backend selection.

Set ``CITESIM_BACKEND=numpy`` to force the pure-numpy kernels; the default
uses numba when it imports cleanly.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

REQUESTED = os.environ.get("CITESIM_BACKEND", "numba").strip().lower()
if REQUESTED not in ("numba", "numpy"):
    raise ImportError(f"CITESIM_BACKEND must be 'numba' or 'numpy', got {REQUESTED!r}")

USE_NUMBA = REQUESTED == "numba" and numba is not None
BACKEND = "numba" if USE_NUMBA else "numpy"
