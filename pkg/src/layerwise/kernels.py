"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy
reference implementation takes over.  Set ``LAYERWISE_PURE_PYTHON=1`` to
force the fallback.
"""

import os

from . import _pykernels

python = _pykernels

try:
    if os.environ.get("LAYERWISE_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend forced by environment")
    from . import _ckernels as compiled
except ImportError:
    compiled = None

backend = compiled if compiled is not None else python
BACKEND = "compiled" if compiled is not None else "python"

transfer_table = backend.transfer_table
min_plus = backend.min_plus
brute_force = backend.brute_force


def available() -> dict:
    """Name -> module for every backend that can be imported here."""
    out = {"python": python}
    if compiled is not None:
        out["compiled"] = compiled
    return out
