"""Kernel backend selection.

The compiled Cython extension is used when importable; otherwise the
NumPy reference implementation takes over.  Set ``TOPCHOICE_BACKEND`` to
``compiled`` (fail if missing), ``python`` (force the fallback) or
``auto`` (default).
"""

import os

from . import _ref

_requested = os.environ.get("TOPCHOICE_BACKEND", "auto").lower()
if _requested not in ("auto", "compiled", "python"):
    raise RuntimeError(
        f"TOPCHOICE_BACKEND must be auto|compiled|python, got {_requested!r}"
    )

backend_name = "python"
panel_choice_integrals = _ref.panel_choice_integrals

if _requested in ("auto", "compiled"):
    try:
        from . import _fast

        panel_choice_integrals = _fast.panel_choice_integrals
        backend_name = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise

__all__ = ["backend_name", "panel_choice_integrals", "_ref"]
