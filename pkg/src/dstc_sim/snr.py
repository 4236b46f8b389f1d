"""Receive SNR at the destination: closed forms and a Monte-Carlo estimator.

The closed form for every protocol is the ratio of summed per-phase signal
powers to summed per-phase noise powers, with each power written in terms
of the squared stage gains.  Expectations over channels use E|h|^2 = var,
E|h|^4 = 2 var^2, and E[(sum_i |h_i|^2) |h_j|^2] = (N + 1) var^2 for the
norm-weighted RMCKC terms.  Block length cancels throughout; the relay
count cancels for every protocol except RMCKC.

Two of the published fully-simplified rational forms (RMC with a missing
parenthesis restored, and EJHS/MJHS as printed) algebraically match the
gain-factor ratios; the RSC and RMCKC printed simplifications do not and
are not used.  The Monte-Carlo estimator is the arbiter: it runs the
actual signal path and averages realized mean-vector and noise energies.
"""

from __future__ import annotations

import numpy as np

from .channel import draw_block_noise, draw_channels
from .numerics import as_generator
from .protocols import (
    REAL_ORTHOGONAL,
    PowerAllocation,
    Protocol,
    build_statistics,
    draw_relay_matrices,
    factor_squares,
    simulate_destination,
    transmit_factors,
)
from .signal import build_codebook


def signal_noise_powers(protocol: Protocol, p1, p2, p3, sigma2sq, n_relays=None):
    """Summed per-phase (signal, noise) received powers per unit block length.

    Inputs broadcast; returns a pair of arrays (or scalars).  Noise power
    includes the unit-variance destination noise of every phase the
    destination listens to.
    """
    protocol = Protocol(protocol)
    if protocol is Protocol.RMCKC:
        if n_relays is None:
            raise ValueError("RMCKC receive SNR depends on the relay count; pass n_relays")
        n = float(n_relays)
    else:
        n = 1.0  # cancels; any positive value gives the same ratio
    s2 = sigma2sq
    sq = factor_squares(protocol, p1, p2, p3, s2, n)
    c1 = sq["c1sq"]
    if protocol is Protocol.EJHS:
        c2, c3 = sq["c2sq"], sq["c3sq"]
        sig = c1 * c2 * c3 * n * n
        nse = c2 * c3 * n * n + c3 * n + 1.0
    elif protocol is Protocol.RMC:
        c2, c3 = sq["c2sq"], sq["c3sq"]
        sig = c1 * c2 * n * s2 + 0.5 * (c1 * c3 * n * s2 + c1 * c2 * c3 * n * n)
        nse = c2 * n * s2 + c3 * n + 0.5 * c2 * c3 * n * n + 2.0
    elif protocol is Protocol.MJHS:
        c21, c22 = sq["c21sq"], sq["c22sq"]
        sig = 2.0 * n * c1 * (c21 + c22) * s2
        nse = 2.0 * (c21 * n * s2 + c22 * n + 1.0)
    elif protocol is Protocol.RSC:
        c2, c3 = sq["c2sq"], sq["c3sq"]
        g1sq, g2sq = sq["gamma1"] ** 2, sq["gamma2"] ** 2
        sig = c1 * c2 * n * s2 + c1 * c3 * g1sq * n * s2 + c1 * c2 * c3 * g2sq * n * n
        nse = c2 * n * s2 + c3 * (g1sq + g2sq) * n + c2 * c3 * g2sq * n * n + 2.0
    elif protocol is Protocol.RMCKC:
        c2, c3 = sq["c2sq"], sq["c3sq"]
        sig = 2.0 * n * c1 * c2 * s2 + 0.5 * (
            2.0 * n * c1 * c3 * s2**2 + 2.0 * n * n * (n + 1.0) * c1 * c2 * c3
        )
        nse = n * c2 * s2 + 0.5 * (n * c3 * s2 + n * n * (n + 1.0) * c2 * c3 + n * n * c3) + 2.0
    else:  # pragma: no cover
        raise ValueError(f"unknown protocol {protocol!r}")
    return sig, nse


def snr_closed_form(protocol: Protocol, p1, p2, p3, sigma2sq, n_relays=None):
    """Closed-form receive SNR; broadcasts over array inputs.

    Degenerate gain configurations (possible only for RSC with both
    combining weights zero) evaluate to SNR 0.
    """
    sig, nse = signal_noise_powers(protocol, p1, p2, p3, sigma2sq, n_relays)
    out = np.where(sig > 0.0, sig / nse, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def ejhs_equal_split_snr(total_power: float) -> float:
    """EJHS receive SNR at its maximizing equal power split."""
    p = total_power
    return p**3 / (9.0 * (3.0 + 3.0 * p + p * p))


def ejhs_rational_form(p1, p2, p3):
    """EJHS SNR as the fully-reduced rational function; cross-check only."""
    return p1 * p2 * p3 / ((1.0 + p2) * (1.0 + p3) + p1 * (1.0 + p2 + p3))


def mjhs_rational_form(p1, p2, p3, sigma2sq):
    """MJHS SNR as the fully-reduced rational function; cross-check only."""
    s2 = sigma2sq
    num = p1 * s2 * ((1.0 + p1) * p3 + p2 * (1.0 + p1 * s2))
    den = (
        2.0
        + p3
        + 2.0 * p1**2 * s2
        + p2 * s2
        + p1 * (2.0 + p3 + 2.0 * s2 + p2 * s2**2)
    )
    return num / den


def snr_monte_carlo(protocol: Protocol, alloc: PowerAllocation, n_relays: int, t: int,
                    samples: int, rng, pam_order: int = 2) -> float:
    """Estimate receive SNR by running the signal path end to end.

    Every sample draws fresh channels, relay matrices, a codebook block,
    and noise, then accumulates the realized mean-vector energy and the
    realized noise energy of the destination observation.  Nothing from
    the closed forms (or the assembled covariances) enters the estimate,
    so agreement with snr_closed_form checks both sides.
    """
    if samples < 1000:
        raise ValueError("estimator needs at least 1e3 samples")
    protocol = Protocol(protocol)
    g = as_generator(rng)
    codebook = build_codebook(t, pam_order)
    factors = transmit_factors(protocol, alloc, n_relays, t)
    signal_energy = 0.0
    noise_energy = 0.0
    for _ in range(samples):
        channels = draw_channels(n_relays, alloc.sigma2sq, g)
        matrices = draw_relay_matrices(n_relays, t, REAL_ORTHOGONAL, g)
        noise = draw_block_noise(n_relays, t, g)
        s = codebook.symbols[g.integers(len(codebook))]
        stats = build_statistics(protocol, channels, matrices, factors)
        m = stats.mean(s)
        y = simulate_destination(protocol, s, channels, matrices, factors, noise)
        signal_energy += float(np.real(np.vdot(m, m)))
        noise_energy += float(np.real(np.vdot(y - m, y - m)))
    return signal_energy / noise_energy
