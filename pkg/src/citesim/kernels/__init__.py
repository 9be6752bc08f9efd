"""Hot numeric kernels.

Both implementations share signatures and tie-breaking rules, so the choice
of backend never changes which items are selected (up to last-ulp rounding
in the pool sums).
"""

from .._backend import BACKEND, USE_NUMBA
from . import _numpy as numpy_impl

if USE_NUMBA:
    from . import _numba as numba_impl

    impl = numba_impl
else:
    numba_impl = None
    impl = numpy_impl

topk_keys = impl.topk_keys
composite_topk = impl.composite_topk
triangle_counts = impl.triangle_counts
core_numbers = impl.core_numbers

__all__ = [
    "BACKEND",
    "composite_topk",
    "core_numbers",
    "impl",
    "numba_impl",
    "numpy_impl",
    "topk_keys",
    "triangle_counts",
]
