"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise, or
when ``DTLE_NET_PURE_PYTHON`` is set to a non-empty value other than ``0``,
the numpy implementations in ``_fallback`` are used.
"""

import os

from . import _fallback

fallback = _fallback
compiled = None

try:
    from . import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def _select():
    forced = os.environ.get("DTLE_NET_PURE_PYTHON", "")
    if compiled is None or (forced and forced != "0"):
        return fallback, "python"
    return compiled, "compiled"


kernels, BACKEND = _select()


def thread_cap():
    """Worker cap from ``DTLE_NET_THREADS``; defaults to all cores."""
    raw = os.environ.get("DTLE_NET_THREADS", "")
    if raw.strip():
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    return os.cpu_count() or 1
