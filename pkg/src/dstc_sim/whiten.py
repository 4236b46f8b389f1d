"""Backend selection for the whitened-metric kernel.

The compiled Cython kernel is used when its extension module imported
cleanly; otherwise the NumPy implementation takes over.  Set
DSTC_SIM_BACKEND=python (or =compiled) to force a choice; forcing
`compiled` when the extension is missing raises at import time rather
than silently falling back.
"""

from __future__ import annotations

import os

import numpy as np

from . import _whiten_np

_FORCED = os.environ.get("DSTC_SIM_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = _whiten_np
    _BACKEND = "python"
else:
    try:
        from . import _whiten_cy as _impl  # type: ignore[no-redef]

        _BACKEND = "compiled"
    except ImportError:
        if _FORCED == "compiled":
            raise
        _impl = _whiten_np
        _BACKEND = "python"


def backend_name() -> str:
    return _BACKEND


def whitened_metrics(lower: np.ndarray, y: np.ndarray, means: np.ndarray) -> np.ndarray:
    """||L^{-1}(y - means[k])||^2 for every candidate k.

    `lower` is the (d, d) lower Cholesky factor, `y` the length-d
    observation, `means` the (k, d) stack of candidate mean vectors.
    """
    lower = np.ascontiguousarray(lower, dtype=np.complex128)
    y = np.ascontiguousarray(y, dtype=np.complex128)
    means = np.ascontiguousarray(means, dtype=np.complex128)
    return _impl.whitened_metrics(lower, y, means)
