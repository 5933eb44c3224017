"""Kernel backend selection.

The compiled extension is preferred when importable; set GRAPHFIELDS_KERNELS
to "python" or "compiled" to force a choice ("compiled" fails loudly if the
extension is missing).
"""

from __future__ import annotations

import os

from . import _kernels_py


def get_kernels(name: str):
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    if name == "auto":
        try:
            from . import _kernels
            return _kernels
        except ImportError:
            return _kernels_py
    raise ValueError(f"unknown kernel backend {name!r} (expected auto, compiled, or python)")


def available_backends() -> tuple[str, ...]:
    try:
        from . import _kernels  # noqa: F401
        return ("compiled", "python")
    except ImportError:
        return ("python",)


kernels = get_kernels(os.environ.get("GRAPHFIELDS_KERNELS", "auto"))
BACKEND = kernels.BACKEND_NAME
