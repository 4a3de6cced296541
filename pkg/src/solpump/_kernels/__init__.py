"""Kernel backend selection.

The compiled extension is preferred; set SOLPUMP_FORCE_PURE=1 to force the
NumPy fallback (useful for benchmarking and debugging). Both backends share
the call signatures documented in pure.py.
"""

import os

if os.environ.get("SOLPUMP_FORCE_PURE", "0") not in ("", "0"):
    from . import pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import pure as _impl

        BACKEND = "pure"

phase_rotate = _impl.phase_rotate
ee_advance = _impl.ee_advance

__all__ = ["BACKEND", "phase_rotate", "ee_advance"]
