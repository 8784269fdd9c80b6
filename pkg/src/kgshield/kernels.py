"""Backend selection for the hot kernels.

The compiled extension is used when it imports; setting
``KGSHIELD_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("KGSHIELD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

connected_subsets = _impl.connected_subsets
local_layers = _impl.local_layers
all_matches = _impl.all_matches
bucketize = _impl.bucketize
