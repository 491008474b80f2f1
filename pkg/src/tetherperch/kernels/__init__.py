"""Kernel backend selection.

The compiled extension is preferred when importable; otherwise the pure-Python
reference implementation is used.  Set ``TETHERPERCH_PURE=1`` to force the
fallback (useful for parity testing and debugging).  Both backends expose the
same two entry points and produce bit-identical results.
"""

from __future__ import annotations

import os

from . import layout
from .layout import N_OUT, N_PARAMS

if os.environ.get("TETHERPERCH_PURE", "") == "1":
    from . import reference as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import reference as _impl

        BACKEND = "python"

step_world = _impl.step_world
project_chain = _impl.project_chain


def get_backend(name: str):
    """Return (step_world, project_chain) for an explicit backend name."""
    if name == "python":
        from . import reference

        return reference.step_world, reference.project_chain
    if name == "compiled":
        from . import _core  # type: ignore[attr-defined]

        return _core.step_world, _core.project_chain
    raise ValueError(f"unknown kernel backend: {name!r}")


__all__ = [
    "BACKEND",
    "N_OUT",
    "N_PARAMS",
    "get_backend",
    "layout",
    "project_chain",
    "step_world",
]
