"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise the
numpy implementations in ``_fallback`` take over.  ``set_backend`` lets
tests and benchmarks force either one.  The only environment variable read
anywhere in the package is ``HELMSING_THREADS`` (thread count for the
compiled planar sums).
"""

import os

from . import _fallback

try:
    from . import _core
except ImportError:  # pragma: no cover - exercised only without a compiler
    _core = None

HAS_CORE = _core is not None
_active = _core if HAS_CORE else _fallback


def threads():
    try:
        return max(1, int(os.environ.get("HELMSING_THREADS", "1")))
    except ValueError:
        return 1


def backend_name():
    return "compiled" if _active is _core and _core is not None else "python"


def set_backend(name):
    """Select ``"compiled"``, ``"python"`` or ``"auto"``; returns the previous name."""
    global _active
    prev = backend_name()
    if name == "python":
        _active = _fallback
    elif name == "compiled":
        if not HAS_CORE:
            raise RuntimeError("compiled core is not available")
        _active = _core
    elif name == "auto":
        _active = _core if HAS_CORE else _fallback
    else:
        raise ValueError(f"unknown backend {name!r}")
    return prev


def besseljy(nu, x):
    return _active.besseljy(float(nu), x)


def besselj(nu, x):
    return _active.besselj(float(nu), x)


def planar_apply(table, f):
    if _active is _fallback:
        return _fallback.planar_apply(table, f)
    return _core.planar_apply(table, f, threads())


def phi2_point_sum(px, py, cx, cy, w):
    if _active is _fallback:
        return _fallback.phi2_point_sum(px, py, cx, cy, w)
    return _core.phi2_point_sum(px, py, cx, cy, w, threads())
