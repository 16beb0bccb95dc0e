"""Hot-kernel backend selection.

The compiled extension (``_ckernels``, Cython) is preferred when importable;
otherwise the numpy fallback (``_pykernels``) is used. Override with the
environment variable ``GESTLOCO_BACKEND=python`` or ``=c`` (the latter raises
if the extension is missing). ``kernels.BACKEND_NAME`` tells which one won.
"""

from __future__ import annotations

import os

from . import _pykernels


def get_kernels(name: str | None = None):
    """Return the kernel module for ``name`` ('python', 'c', or None = auto)."""
    if name is None:
        name = os.environ.get("GESTLOCO_BACKEND", "").strip().lower() or "auto"
    if name in ("python", "py"):
        return _pykernels
    if name in ("c", "compiled"):
        from . import _ckernels
        return _ckernels
    if name == "auto":
        try:
            from . import _ckernels
            return _ckernels
        except ImportError:
            return _pykernels
    raise ValueError(f"unknown backend {name!r} (expected 'python', 'c' or 'auto')")


kernels = get_kernels()
BACKEND_NAME: str = kernels.BACKEND_NAME
