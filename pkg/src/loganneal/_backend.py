"""Kernel backend selection.

The compiled extension is preferred when importable; set
``ANNEAL_BACKEND=python`` or ``ANNEAL_BACKEND=compiled`` to force a choice.
Forcing ``compiled`` raises if the extension is missing rather than silently
falling back.
"""
import os

_requested = os.environ.get("ANNEAL_BACKEND", "").strip().lower()

if _requested not in ("", "python", "compiled"):
    raise RuntimeError(
        f"ANNEAL_BACKEND must be 'python' or 'compiled', got {_requested!r}"
    )

if _requested == "python":
    from loganneal import _pykernels as kernels

    BACKEND = "python"
else:
    try:
        from loganneal import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise RuntimeError(
                "ANNEAL_BACKEND=compiled but the loganneal._kernels extension "
                "is not built; reinstall with a C compiler available"
            ) from None
        from loganneal import _pykernels as kernels  # type: ignore[no-redef]

        BACKEND = "python"
