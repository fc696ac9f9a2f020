"""Seeded market simulation with a compiled hot loop.

The tick kernel exists twice: a Cython extension and a pure-Python module
with identical semantics. The extension is preferred when built; set
UBI_PURE_PYTHON=1 to force the fallback. Both produce bit-identical traces,
which the test suite checks directly.
"""

import os

from . import _kernel_py

if os.environ.get("UBI_PURE_PYTHON"):
    kernel = _kernel_py
else:
    try:
        from . import _kernel as kernel  # type: ignore[no-redef]
    except ImportError:
        kernel = _kernel_py

KERNEL_IMPL = kernel.IMPL

from .market import (  # noqa: E402
    Event,
    Market,
    MarketConfig,
    STRATEGY_IDS,
    STRATEGY_NAMES,
)

__all__ = [
    "Event", "KERNEL_IMPL", "Market", "MarketConfig",
    "STRATEGY_IDS", "STRATEGY_NAMES", "kernel",
]
