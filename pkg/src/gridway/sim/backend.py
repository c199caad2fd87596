"""Simulation backend selection.

The compiled Cython kernel is preferred when it imported cleanly; the
pure-Python twin is the fallback.  GRIDWAY_BACKEND=python|compiled
forces a choice (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _core_py

try:
    from . import _core_cy
    _HAVE_COMPILED = True
except ImportError:  # extension not built on this install
    _core_cy = None
    _HAVE_COMPILED = False


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _HAVE_COMPILED else ("python",)


def default_backend() -> str:
    forced = os.environ.get("GRIDWAY_BACKEND")
    if forced:
        if forced not in ("compiled", "python"):
            raise ValueError(f"GRIDWAY_BACKEND must be 'compiled' or 'python', got {forced!r}")
        if forced == "compiled" and not _HAVE_COMPILED:
            raise RuntimeError("GRIDWAY_BACKEND=compiled but the extension is not built")
        return forced
    return "compiled" if _HAVE_COMPILED else "python"


def core_class(backend: str | None = None):
    name = backend or default_backend()
    if name == "compiled":
        if not _HAVE_COMPILED:
            raise RuntimeError("compiled backend requested but the extension is not built")
        return _core_cy.SimCore
    if name == "python":
        return _core_py.SimCore
    raise ValueError(f"unknown backend {name!r}")
