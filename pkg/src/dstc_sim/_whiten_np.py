"""NumPy fallback for the whitened-metric kernel.

Same contract as the compiled version in _whiten_cy: given the lower
Cholesky factor L of a covariance, an observation y, and the candidate
means stacked as rows, return ||L^{-1}(y - mean_k)||^2 for every k.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg


def whitened_metrics(lower: np.ndarray, y: np.ndarray, means: np.ndarray) -> np.ndarray:
    diff = (y[None, :] - means).T  # (d, k) right-hand sides
    w = scipy.linalg.solve_triangular(lower, diff, lower=True, check_finite=False)
    return np.einsum("dk,dk->k", w.real, w.real) + np.einsum("dk,dk->k", w.imag, w.imag)
