"""Shared helpers for the test suite."""

import numpy as np
import pytest

from dstc_sim.channel import draw_channels
from dstc_sim.numerics import SeededStream
from dstc_sim.protocols import (
    REAL_ORTHOGONAL,
    PowerAllocation,
    Protocol,
    build_statistics,
    draw_relay_matrices,
    transmit_factors,
)
from dstc_sim.signal import build_codebook


class ProtocolSetup:
    """One ready-to-simulate scenario: channels, matrices, factors, stats."""

    def __init__(self, protocol, n=2, t=2, power=6.0, sigma2sq=0.5, seed=3,
                 family=REAL_ORTHOGONAL, alloc=None):
        self.protocol = Protocol(protocol)
        self.n = n
        self.t = t
        rng = SeededStream(seed).generator()
        self.alloc = alloc or PowerAllocation.equal_split(power, sigma2sq)
        self.channels = draw_channels(n, self.alloc.sigma2sq, rng)
        self.matrices = draw_relay_matrices(n, t, family, rng)
        self.factors = transmit_factors(self.protocol, self.alloc, n, t)
        self.stats = build_statistics(self.protocol, self.channels, self.matrices, self.factors)
        self.rng = rng  # positioned after the setup draws

    @property
    def codebook(self):
        return build_codebook(self.t, 2)


@pytest.fixture(params=list(Protocol), ids=[p.value for p in Protocol])
def protocol(request):
    return request.param


def empirical_covariance(samples: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """E[(y - m)(y - m)^H] estimated from rows of `samples`."""
    centered = samples - mean[None, :]
    return np.einsum("ka,kb->ab", centered, centered.conj()) / samples.shape[0]
