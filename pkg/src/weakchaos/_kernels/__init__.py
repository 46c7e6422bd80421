"""Kernel dispatch: compiled extension if built, numpy fallback otherwise.

Set WEAKCHAOS_FORCE_FALLBACK=1 to ignore the extension (used by the
benchmark and the cross-implementation tests).
"""

import os

from . import fallback

active = fallback
if not os.environ.get("WEAKCHAOS_FORCE_FALLBACK"):
    try:
        from . import _core as active  # type: ignore[no-redef]
    except ImportError:
        pass

IMPLEMENTATION = active.IMPLEMENTATION


def available_implementations():
    """Names of the kernel implementations importable right now."""
    names = ["python"]
    try:
        from . import _core  # noqa: F401
        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_kernels(name=None):
    """Fetch a kernel module by name ('cython' | 'python'); default active."""
    if name is None:
        return active
    if name == "python":
        return fallback
    if name == "cython":
        from . import _core
        return _core
    raise ValueError(f"unknown kernel implementation {name!r}")
