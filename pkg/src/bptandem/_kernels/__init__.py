"""Kernel backend selection.

The compiled kernel (``ckernel``, built from Cython) and the pure-Python
kernel implement the same window protocol and produce bit-identical results;
the compiled one is simply much faster. Selection order:

* ``BPTANDEM_KERNEL=c``  force the compiled kernel (ImportError if missing)
* ``BPTANDEM_KERNEL=py`` force the pure-Python kernel
* unset/``auto``         compiled if available, else pure Python
"""

from __future__ import annotations

import os

from . import pykernel, state  # noqa: F401

try:
    from . import ckernel as _ckernel
except ImportError:  # extension not built; pure Python still works
    _ckernel = None

_requested = os.environ.get("BPTANDEM_KERNEL", "auto").strip().lower()
if _requested in ("", "auto"):
    _impl = _ckernel if _ckernel is not None else pykernel
elif _requested in ("c", "compiled", "cython"):
    if _ckernel is None:
        raise ImportError(
            "BPTANDEM_KERNEL=c requested but the compiled kernel is not built"
        )
    _impl = _ckernel
elif _requested in ("py", "python", "pure"):
    _impl = pykernel
else:
    raise ValueError(f"unrecognized BPTANDEM_KERNEL value {_requested!r}")

BACKEND = "compiled" if _impl is not pykernel else "python"
process_window = _impl.process_window


def available_backends() -> dict:
    """Importable kernel backends by name."""
    out = {"python": pykernel}
    if _ckernel is not None:
        out["compiled"] = _ckernel
    return out


def get_backend(name: str):
    try:
        return available_backends()[name]
    except KeyError:
        raise KeyError(f"backend {name!r} not available") from None
