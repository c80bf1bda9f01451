"""Kernel backend selection.

The integration kernels exist twice: a numba-compiled version (fast,
default) and a pure-numpy version (no JIT dependency). The active
backend is chosen per call from the DRA_GRID_BACKEND environment
variable ("numba", "numpy" or "auto") unless an explicit name is
passed through the dynamics API.
"""

from __future__ import annotations

import os

ENV_VAR = "DRA_GRID_BACKEND"
BACKEND_NAMES = ("numba", "numpy")


def resolve(name: str | None = None):
    """Return the kernel module for the requested backend.

    name defaults to the DRA_GRID_BACKEND environment variable, then to
    "auto" (numba when importable, numpy otherwise).
    """
    if name is None:
        name = os.environ.get(ENV_VAR, "auto").strip().lower() or "auto"
    if name == "auto":
        try:
            from . import _kernels_numba

            return _kernels_numba
        except ImportError:
            from . import _kernels_numpy

            return _kernels_numpy
    if name == "numba":
        from . import _kernels_numba

        return _kernels_numba
    if name == "numpy":
        from . import _kernels_numpy

        return _kernels_numpy
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKEND_NAMES} or 'auto'")


def backend_name(name: str | None = None) -> str:
    """Resolved backend name ("numba" or "numpy")."""
    module = resolve(name)
    return "numba" if module.__name__.endswith("numba") else "numpy"
