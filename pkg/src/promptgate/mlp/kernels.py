"""Kernel backend selection.

The numba-jitted kernels are used when importable; setting the environment
variable ``PROMPTGATE_NUMBA`` to ``0``/``false``/``off`` forces the pure
numpy path. Both backends are deterministic; results may differ between
them in the last ulp, so a process sticks with the backend chosen at
import time.
"""

from __future__ import annotations

import os
import warnings

_FLAG = os.environ.get("PROMPTGATE_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "false", "off", "no"):
    from . import kernels_numpy as _impl

    _BACKEND = "numpy"
else:
    try:
        from . import kernels_numba as _impl  # type: ignore[no-redef]

        _BACKEND = "numba"
    except ImportError:
        if _FLAG in ("1", "true", "on", "yes"):
            warnings.warn(
                "PROMPTGATE_NUMBA requested but numba is not importable; "
                "falling back to numpy kernels",
                RuntimeWarning,
                stacklevel=1,
            )
        from . import kernels_numpy as _impl  # type: ignore[no-redef]

        _BACKEND = "numpy"

standardize = _impl.standardize
relu = _impl.relu
relu_backward = _impl.relu_backward
softmax_rows = _impl.softmax_rows
softmax_xent = _impl.softmax_xent
xent_backward = _impl.xent_backward
adam_update = _impl.adam_update


def backend_name() -> str:
    return _BACKEND
