"""Numba switch.

Hot kernels are written twice: an ``@njit`` loop version and a vectorised
numpy version.  Which one is used is decided once at import time from the
``LDSPARSE_DISABLE_NUMBA`` environment variable (any of ``1/true/yes``), or
when numba is not importable.  ``set_backend`` flips it at runtime, which is
what the benchmark and the cross-backend tests use.
"""

from __future__ import annotations

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_DISABLED = os.environ.get("LDSPARSE_DISABLE_NUMBA", "").strip().lower() in {
    "1",
    "true",
    "yes",
}

_state = {"numba": HAVE_NUMBA and not _DISABLED}


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op decorator without numba."""
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def use_numba() -> bool:
    return _state["numba"]


def set_backend(name: str) -> None:
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _state["numba"] = name == "numba"


def backend() -> str:
    return "numba" if _state["numba"] else "numpy"
