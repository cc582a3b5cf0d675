"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
kernels are used.  ``CHAPLYGIN_BACKEND`` may be set to ``python`` or
``compiled`` to force a choice (``compiled`` fails loudly when unavailable).
"""

import os

from . import _purepy

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

AVAILABLE = {"python": _purepy}
if _ckernels is not None:
    AVAILABLE["compiled"] = _ckernels


def get(name=None):
    """Return the kernel module called ``name`` (``None`` picks the default).

    Any object already providing the kernel functions is returned as is,
    which lets tests substitute a manufactured right-hand side.
    """
    if hasattr(name, "dp45_step"):
        return name
    if name is None or name == "auto":
        name = "compiled" if "compiled" in AVAILABLE else "python"
    try:
        return AVAILABLE[name]
    except KeyError:
        raise ImportError(f"kernel backend {name!r} is not available; "
                          f"have {sorted(AVAILABLE)}") from None


kernels = get(os.environ.get("CHAPLYGIN_BACKEND") or None)
