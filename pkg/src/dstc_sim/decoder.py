"""Exact ML detection over the codebook, plus a brute-force density oracle.

Because the observation covariance does not depend on the transmitted
block, maximizing the Gaussian likelihood reduces to minimizing the
whitened quadratic form; ml_decode does exactly that with one covariance
factorization per block.  oracle_decode evaluates the full density,
determinant included, through a dense inverse and exists only as an
independent cross-check.
"""

from __future__ import annotations

import numpy as np

from .numerics import CholeskyFactor, DimensionMismatch, cholesky_psd
from .protocols import SufficientStatistics
from .signal import Codebook
from .whiten import whitened_metrics


class SingularCovariance(Exception):
    """Dense inversion failed in the oracle path."""


def decode_metrics(y: np.ndarray, stats: SufficientStatistics, codebook: Codebook,
                   factor: CholeskyFactor | None = None) -> np.ndarray:
    """Whitened quadratic-form metric for every codebook entry."""
    y = np.asarray(y)
    if y.shape != (stats.y_dim,):
        raise DimensionMismatch(f"observation shape {y.shape} does not match y_dim {stats.y_dim}")
    if codebook.t != stats.g.shape[1]:
        raise DimensionMismatch("codebook block length does not match statistics")
    if factor is None:
        factor = cholesky_psd(stats.p_y)
    means = codebook.symbols @ stats.g.T  # (size, y_dim)
    return whitened_metrics(factor.lower, y, means)


def ml_decode(y: np.ndarray, stats: SufficientStatistics, codebook: Codebook,
              factor: CholeskyFactor | None = None) -> int:
    """Index of the ML codebook entry; ties break toward the lowest index.

    Pass a precomputed `factor` of stats.p_y to amortize the factorization
    when decoding multiple observations against the same statistics.
    """
    metrics = decode_metrics(y, stats, codebook, factor=factor)
    return int(np.argmin(metrics))


def oracle_log_densities(y: np.ndarray, stats: SufficientStatistics,
                         codebook: Codebook) -> np.ndarray:
    """Log of the complex Gaussian density of y for every candidate block."""
    y = np.asarray(y)
    if y.shape != (stats.y_dim,):
        raise DimensionMismatch(f"observation shape {y.shape} does not match y_dim {stats.y_dim}")
    p = stats.p_y
    try:
        p_inv = np.linalg.inv(p)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(str(exc)) from None
    sign, logdet = np.linalg.slogdet(p)
    if sign == 0:
        raise SingularCovariance("covariance determinant is zero")
    diff = y[None, :] - codebook.symbols @ stats.g.T  # (size, y_dim)
    quad = np.real(np.einsum("ka,ab,kb->k", diff.conj(), p_inv, diff))
    return -quad - logdet - stats.y_dim * np.log(np.pi)


def oracle_decode(y: np.ndarray, stats: SufficientStatistics, codebook: Codebook) -> int:
    """Argmax of the full Gaussian density; slow, for verification only."""
    return int(np.argmax(oracle_log_densities(y, stats, codebook)))
