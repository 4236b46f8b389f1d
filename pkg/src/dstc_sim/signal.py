"""Normalized M-PAM block codebook with Gray bit labels.

A block of T complex symbols has its real and imaginary components drawn
independently from a scaled M-PAM level set; the scale makes the average
block energy exactly one, so transmit powers are controlled entirely by
the stage gain factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class CodebookTooLarge(Exception):
    """Requested enumeration exceeds the configured size cap."""


class IndexOutOfRange(Exception):
    """Codebook index outside [0, len)."""


DEFAULT_CAP = 1 << 20


@dataclass(frozen=True)
class Codebook:
    """Fully enumerated block constellation.

    symbols[i] is the i-th candidate block (length t, complex) and
    labels[i] its Gray-coded bit word of bits_per_block bits.  Enumeration
    order is fixed: the index is read as base-M digits, most significant
    first, over the axes (re s(1), im s(1), re s(2), ...).
    """

    t: int
    m: int
    k: float
    symbols: np.ndarray  # (size, t) complex128
    labels: np.ndarray  # (size,) uint64
    bits_per_block: int

    def __len__(self) -> int:
        return self.symbols.shape[0]


def pam_levels(m: int, k: float) -> np.ndarray:
    """Scaled amplitude levels k * {-(m-1)/2, ..., -1/2, 1/2, ..., (m-1)/2}."""
    return k * (np.arange(m) - (m - 1) / 2.0)


def build_codebook(t: int, m: int, cap: int = DEFAULT_CAP) -> Codebook:
    """Enumerate the full M-PAM block codebook of size M**(2T).

    The normalization k = sqrt(6 / (T (M^2 - 1))) gives mean block energy
    exactly one over the uniform codebook.  Bit labels are Gray per axis,
    so adjacent amplitude levels differ in a single bit.
    """
    if t < 1:
        raise ValueError("block length must be >= 1")
    if m < 2 or m % 2 != 0:
        raise ValueError("PAM order must be even and >= 2")
    size = m ** (2 * t)
    if size > cap:
        raise CodebookTooLarge(f"M**(2T) = {size} exceeds cap {cap}")

    k = math.sqrt(6.0 / (t * (m * m - 1)))
    levels = pam_levels(m, k)
    bits_per_axis = (m - 1).bit_length()
    n_axes = 2 * t

    idx = np.arange(size, dtype=np.int64)
    weights = m ** np.arange(n_axes - 1, -1, -1, dtype=np.int64)
    digits = (idx[:, None] // weights[None, :]) % m  # (size, 2t), MSD first

    gray = digits ^ (digits >> 1)
    labels = np.zeros(size, dtype=np.uint64)
    for a in range(n_axes):
        shift = bits_per_axis * (n_axes - 1 - a)
        labels |= gray[:, a].astype(np.uint64) << np.uint64(shift)

    symbols = levels[digits[:, 0::2]] + 1j * levels[digits[:, 1::2]]
    return Codebook(
        t=t,
        m=m,
        k=k,
        symbols=symbols,
        labels=labels,
        bits_per_block=bits_per_axis * n_axes,
    )


def count_bit_errors(index_true: int, index_decoded: int, codebook: Codebook) -> int:
    """Hamming distance between the bit labels of two codebook entries."""
    size = len(codebook)
    for name, idx in (("index_true", index_true), ("index_decoded", index_decoded)):
        if not 0 <= idx < size:
            raise IndexOutOfRange(f"{name}={idx} outside [0, {size})")
    diff = int(codebook.labels[index_true]) ^ int(codebook.labels[index_decoded])
    return diff.bit_count()
