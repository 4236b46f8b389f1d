"""Rayleigh-fading channel draws and per-block receiver noise.

All coefficients are circularly-symmetric complex Gaussian, quasi static
over one block of T symbols.  Links between consecutive stages have unit
variance; the weak links (source to layer 2, layer 1 to destination) have
variance sigma2sq <= 1.  Noise variance is fixed at one per complex entry,
so the operating point is set by the total transmit power alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import as_generator


@dataclass(frozen=True)
class ChannelRealization:
    """One block's fading coefficients for a network with n relays per layer.

    h_12[i, j] is the gain from relay j+1 of layer 1 to relay j+1 of layer 2
    (row = layer-1 index, column = layer-2 index).
    """

    h_s1: np.ndarray  # (n,)   source -> layer 1, variance 1
    h_12: np.ndarray  # (n, n) layer 1 -> layer 2, variance 1
    h_2d: np.ndarray  # (n,)   layer 2 -> destination, variance 1
    h_s2: np.ndarray  # (n,)   source -> layer 2, variance sigma2sq
    h_1d: np.ndarray  # (n,)   layer 1 -> destination, variance sigma2sq
    sigma2sq: float

    @property
    def n_relays(self) -> int:
        return self.h_s1.shape[0]


@dataclass(frozen=True)
class NoiseModel:
    """All receiver noise vectors consumed by one simulated block.

    Unit variance per complex entry throughout.  Protocols use the subset
    relevant to their phase structure; unused vectors are simply ignored.
    """

    u1_phase1: np.ndarray  # (n, t) at layer-1 relays, phase 1
    u2_phase1: np.ndarray  # (n, t) at layer-2 relays, phase 1
    u2_phase2: np.ndarray  # (n, t) at layer-2 relays, phase 2
    ud_phase2: np.ndarray  # (t,)   at destination, phase 2
    ud_phase3: np.ndarray  # (t,)   at destination, phase 3

    @classmethod
    def silent(cls, n: int, t: int) -> "NoiseModel":
        """All-zero noise, for checking the noiseless signal path."""
        return cls(
            u1_phase1=np.zeros((n, t), dtype=complex),
            u2_phase1=np.zeros((n, t), dtype=complex),
            u2_phase2=np.zeros((n, t), dtype=complex),
            ud_phase2=np.zeros(t, dtype=complex),
            ud_phase3=np.zeros(t, dtype=complex),
        )


def complex_gaussian(shape, variance: float, rng) -> np.ndarray:
    """Zero-mean circularly-symmetric draws with E|x|^2 = variance."""
    g = as_generator(rng)
    scale = np.sqrt(variance / 2.0)
    return scale * (g.standard_normal(shape) + 1j * g.standard_normal(shape))


def draw_channels(n: int, sigma2sq: float, rng) -> ChannelRealization:
    """Draw one quasi-static realization of all link coefficients."""
    if n < 1:
        raise ValueError("relay count must be >= 1")
    if not 0.0 <= sigma2sq <= 1.0:
        raise ValueError("weak-link variance must lie in [0, 1]")
    g = as_generator(rng)
    return ChannelRealization(
        h_s1=complex_gaussian(n, 1.0, g),
        h_12=complex_gaussian((n, n), 1.0, g),
        h_2d=complex_gaussian(n, 1.0, g),
        h_s2=complex_gaussian(n, sigma2sq, g),
        h_1d=complex_gaussian(n, sigma2sq, g),
        sigma2sq=sigma2sq,
    )


def draw_noise(t: int, rng) -> np.ndarray:
    """One length-t receiver noise vector, unit variance per entry."""
    if t < 1:
        raise ValueError("block length must be >= 1")
    return complex_gaussian(t, 1.0, rng)


def draw_block_noise(n: int, t: int, rng) -> NoiseModel:
    """All noise vectors for one block, in a fixed draw order."""
    g = as_generator(rng)
    return NoiseModel(
        u1_phase1=complex_gaussian((n, t), 1.0, g),
        u2_phase1=complex_gaussian((n, t), 1.0, g),
        u2_phase2=complex_gaussian((n, t), 1.0, g),
        ud_phase2=complex_gaussian(t, 1.0, g),
        ud_phase3=complex_gaussian(t, 1.0, g),
    )
