"""Selects the split-scan kernel at import: compiled extension when built,
numpy fallback otherwise. Set RUINSCORE_NO_EXT=1 to force the fallback.

Both implementations are bit-identical by contract, so trained models do not
depend on which one is active (tests and benchmarks/bench_split_kernel.py
verify this).
"""

from __future__ import annotations

import os

if os.environ.get("RUINSCORE_NO_EXT"):
    from . import _split_np as _impl

    COMPILED = False
else:
    try:
        from . import _split_cy as _impl  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        from . import _split_np as _impl  # type: ignore[no-redef]

        COMPILED = False

NO_SPLIT = _impl.NO_SPLIT


def best_split(x_sorted, g_sorted, h_sorted, lam, min_leaf):
    return _impl.best_split(x_sorted, g_sorted, h_sorted, lam, min_leaf)


def backend_name() -> str:
    return "compiled" if COMPILED else "python"
