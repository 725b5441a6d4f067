"""Kernel backend selection: compiled extension when built, pure Python otherwise.

Override with ANYONSIM_KERNEL=python|compiled or per-call via the
``backend`` argument.  Both kernels implement the same draw protocol and
floating-point operation order, so a given seed produces bit-identical
trajectories on either.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel_cy

    HAVE_COMPILED = True
except ImportError:
    _kernel_cy = None
    HAVE_COMPILED = False


def get_kernel(name: str | None = None):
    if name is None:
        name = os.environ.get("ANYONSIM_KERNEL", "auto")
    if name in ("auto", None):
        return _kernel_cy if HAVE_COMPILED else _kernel_py
    if name in ("compiled", "cy", "cython"):
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return _kernel_cy
    if name in ("python", "py", "pure"):
        return _kernel_py
    raise ValueError(f"unknown kernel backend {name!r}")


def kernel_name(kernel) -> str:
    return "compiled" if kernel is _kernel_cy and kernel is not None else "python"


def active_backend() -> str:
    return kernel_name(get_kernel())
