"""Kernel backend selection.

The compiled extension is preferred when present; set ``KITVQE_BACKEND``
to ``python`` or ``cython`` to force a choice (forcing ``cython`` when
the extension is missing raises, so benchmarks cannot silently fall
back).
"""

from __future__ import annotations

import os

from . import _kernels_py

_forced = os.environ.get("KITVQE_BACKEND", "").strip().lower()

if _forced == "python":
    kernels = _kernels_py
    BACKEND = "python"
elif _forced == "cython":
    from . import _kernels_cy as kernels  # noqa: F401

    BACKEND = "cython"
elif _forced == "":
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "python"
else:
    raise RuntimeError(f"KITVQE_BACKEND must be 'python' or 'cython', got {_forced!r}")


def get_kernels(name: str | None = None):
    """Return a kernel module by name ('python', 'cython', or None for active)."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels_cy

        return _kernels_cy
    raise ValueError(f"unknown backend {name!r}")
