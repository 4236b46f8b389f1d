"""Random-matrix generation and Gaussian quadratic-form primitives.

Everything here is deliberately small: Haar-distributed relay matrices,
a jittered Cholesky factorization for covariances, and the whitened
quadratic form that the ML decoder minimizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class DimensionMismatch(Exception):
    """Operands have incompatible shapes."""


class FactorizationFailure(Exception):
    """Covariance is malformed: not Hermitian or not factorizable with jitter."""


# Absolute diagonal loadings tried in order when a covariance is not
# numerically positive definite.  The first rung (no jitter) is the
# normal path; anything past the last rung signals a malformed matrix.
JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class SeededStream:
    """Deterministic random stream keyed by (seed, stream index).

    The same pair always reproduces the same draw sequence, and distinct
    stream indices give statistically independent sequences, which is what
    makes per-block parallel simulation order-independent.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept either a SeededStream or an already-running Generator."""
    if isinstance(rng, SeededStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected SeededStream or numpy Generator, got {type(rng)!r}")


def haar_orthogonal(t: int, rng) -> np.ndarray:
    """Draw a t x t real orthogonal matrix, Haar distributed.

    QR of an i.i.d. Gaussian matrix with the signs of diag(R) folded back
    into Q; without the sign fix the result is not rotation invariant.
    Entries come out zero mean with variance exactly 1/t.
    """
    if t < 1:
        raise ValueError("matrix dimension must be >= 1")
    g = as_generator(rng)
    z = g.standard_normal((t, t))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))


def haar_unitary(t: int, rng) -> np.ndarray:
    """Draw a t x t complex unitary matrix, Haar distributed."""
    if t < 1:
        raise ValueError("matrix dimension must be >= 1")
    g = as_generator(rng)
    z = g.standard_normal((t, t)) + 1j * g.standard_normal((t, t))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular L with L @ L^H = P + jitter * I."""

    lower: np.ndarray
    jitter: float


def cholesky_psd(p: np.ndarray) -> CholeskyFactor:
    """Factor a Hermitian positive (semi)definite matrix.

    Walks the jitter ladder so covariances that are only semidefinite up to
    rounding still factor.  Raises FactorizationFailure for non-Hermitian
    input or when the ladder is exhausted.
    """
    p = np.asarray(p)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {p.shape}")
    if np.max(np.abs(p - p.conj().T)) > HERMITIAN_TOL:
        raise FactorizationFailure("matrix is not Hermitian within 1e-10")
    sym = 0.5 * (p + p.conj().T)
    eye = np.eye(p.shape[0])
    for jitter in JITTER_LADDER:
        try:
            lower = np.linalg.cholesky(sym + jitter * eye)
        except np.linalg.LinAlgError:
            continue
        return CholeskyFactor(lower=lower, jitter=jitter)
    raise FactorizationFailure("jitter ladder exhausted; covariance is malformed")


def quad_form(y: np.ndarray, m: np.ndarray, factor) -> float:
    """Evaluate (y - m)^H P^{-1} (y - m) through the triangular factor of P.

    `factor` is a CholeskyFactor or a bare lower-triangular matrix.  The
    inverse square root is never formed; a triangular solve gives the same
    value with better stability.  The result is real and nonnegative by
    construction.
    """
    lower = factor.lower if isinstance(factor, CholeskyFactor) else np.asarray(factor)
    y = np.asarray(y)
    m = np.asarray(m)
    if y.shape != m.shape:
        raise DimensionMismatch(f"vector shapes differ: {y.shape} vs {m.shape}")
    if lower.shape[0] != y.shape[0]:
        raise DimensionMismatch(
            f"factor of dimension {lower.shape[0]} does not match vector of length {y.shape[0]}"
        )
    d = (y - m).astype(np.complex128, copy=False)
    w = scipy.linalg.solve_triangular(lower, d, lower=True, check_finite=False)
    return float(np.real(np.vdot(w, w)))
