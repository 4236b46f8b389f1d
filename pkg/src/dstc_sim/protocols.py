"""The five two-layer relay protocols.

For each protocol this module provides the per-stage transmit gain factors,
the exact phase-by-phase signal path to the destination, and the sufficient
statistics (mean operator G with m_y(s) = G s, covariance P_y) that the ML
decoder consumes.  The destination is assumed to know all channels, relay
matrices, and gains.

Protocol summary (three phases of T symbols each, relays amplify and
forward through their own matrices):

  EJHS   source -> L1 -> L2 -> destination; weak links unused.
  RMC    L2 combines its phase-1 and phase-2 receptions with a T x 2T
         matrix; destination also keeps the phase-2 signal from L1.
  MJHS   both layers retransmit the same encoded phase-1 reception in
         phases 2 and 3; destination receives twice.
  RSC    like RMC, but L2 combines its two receptions weighted by their
         receive SNRs before re-encoding with a square matrix.
  RMCKC  like RMC with receive-channel knowledge at the relays: each relay
         pre-multiplies by the conjugate (or norm) of its incoming channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ChannelRealization, NoiseModel
from .numerics import DimensionMismatch, as_generator, haar_orthogonal, haar_unitary

SQRT2 = math.sqrt(2.0)

REAL_ORTHOGONAL = "real-orthogonal"
COMPLEX_UNITARY = "complex-unitary"
MATRIX_FAMILIES = (REAL_ORTHOGONAL, COMPLEX_UNITARY)


class Protocol(str, Enum):
    EJHS = "EJHS"
    RMC = "RMC"
    MJHS = "MJHS"
    RSC = "RSC"
    RMCKC = "RMCKC"


class DegenerateFactors(Exception):
    """A gain denominator is zero; receive SNR must be treated as zero."""


@dataclass(frozen=True)
class PowerAllocation:
    """Per-phase average powers (linear scale) plus the weak-link variance.

    For MJHS, p2 and p3 are the totals each layer spends over both of its
    transmitting phases; the factor-of-two split is inside the gains.
    """

    p1: float
    p2: float
    p3: float
    sigma2sq: float

    def __post_init__(self):
        if min(self.p1, self.p2, self.p3) < 0.0:
            raise ValueError("phase powers must be nonnegative")
        if not 0.0 <= self.sigma2sq <= 1.0:
            raise ValueError("weak-link variance must lie in [0, 1]")

    @property
    def total(self) -> float:
        return self.p1 + self.p2 + self.p3

    @classmethod
    def equal_split(cls, total: float, sigma2sq: float) -> "PowerAllocation":
        return cls(total / 3.0, total / 3.0, total / 3.0, sigma2sq)


@dataclass(frozen=True)
class TransmitFactors:
    """Scalar stage gains that enforce the per-phase power budgets.

    Fields not used by a protocol stay None.  MJHS phase 3 repeats phase 2
    with the same gains (c31 = c21, c32 = c22).
    """

    protocol: Protocol
    c1: float
    c2: float | None = None
    c3: float | None = None
    c21: float | None = None
    c22: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None

    @property
    def c31(self) -> float | None:
        return self.c21

    @property
    def c32(self) -> float | None:
        return self.c22


def factor_squares(protocol: Protocol, p1, p2, p3, sigma2sq, n_relays):
    """Squared stage gains, broadcasting over array inputs.

    Shared by transmit_factors and the closed-form SNR so both always use
    identical definitions.  c1^2 is returned per unit block length (the
    block length enters only as an overall factor that cancels in SNRs).
    For RSC the dict carries gamma1/gamma2 and a `degenerate` mask marking
    points where the c3 denominator vanishes.
    """
    p1, p2, p3 = np.asarray(p1, float), np.asarray(p2, float), np.asarray(p3, float)
    out = {
        "c1sq": p1,
        "c2sq": p2 / (n_relays * (p1 + 1.0)),
    }
    if protocol is Protocol.RMC:
        out["c3sq"] = p3 / (n_relays * (2.0 + p1 * sigma2sq + p2))
    elif protocol is Protocol.EJHS:
        out["c3sq"] = p3 / (n_relays * (1.0 + p2))
    elif protocol is Protocol.MJHS:
        out["c21sq"] = p2 / (2.0 * n_relays * (1.0 + p1))
        out["c22sq"] = p3 / (2.0 * n_relays * (1.0 + sigma2sq * p1))
    elif protocol is Protocol.RSC:
        gamma1 = p1 * sigma2sq
        gamma2 = p1 * p2 / (1.0 + p1 + p2)
        denom = gamma1**2 * (1.0 + p1 * sigma2sq) + gamma2**2 * (1.0 + p2)
        degenerate = denom == 0.0
        out["gamma1"] = gamma1
        out["gamma2"] = gamma2
        out["degenerate"] = degenerate
        out["c3sq"] = np.where(degenerate, 0.0, p3 / (n_relays * np.where(degenerate, 1.0, denom)))
    elif protocol is Protocol.RMCKC:
        bracket = (
            8.0 * p1 * p2
            + n_relays * (1.0 + p1 + p2)
            + (1.0 + p1) * sigma2sq
            + sigma2sq**2 * p1 * (1.0 + p1)
        )
        out["c3sq"] = (1.0 + p1) * p3 / (n_relays * bracket)
    else:  # pragma: no cover
        raise ValueError(f"unknown protocol {protocol!r}")
    return out


def transmit_factors(protocol: Protocol, alloc: PowerAllocation, n_relays: int, t: int) -> TransmitFactors:
    """Stage gains for one protocol at a given power allocation."""
    protocol = Protocol(protocol)
    if n_relays < 1 or t < 1:
        raise ValueError("relay count and block length must be >= 1")
    sq = factor_squares(protocol, alloc.p1, alloc.p2, alloc.p3, alloc.sigma2sq, n_relays)
    c1 = math.sqrt(alloc.p1 * t)
    c2 = math.sqrt(float(sq["c2sq"]))
    if protocol is Protocol.MJHS:
        return TransmitFactors(
            protocol=protocol,
            c1=c1,
            c21=math.sqrt(float(sq["c21sq"])),
            c22=math.sqrt(float(sq["c22sq"])),
        )
    if protocol is Protocol.RSC:
        if bool(sq["degenerate"]):
            raise DegenerateFactors(
                "RSC combining weights are both zero (p1 = 0, or sigma2sq = 0 with p2 = 0)"
            )
        return TransmitFactors(
            protocol=protocol,
            c1=c1,
            c2=c2,
            c3=math.sqrt(float(sq["c3sq"])),
            gamma1=float(sq["gamma1"]),
            gamma2=float(sq["gamma2"]),
        )
    return TransmitFactors(protocol=protocol, c1=c1, c2=c2, c3=math.sqrt(float(sq["c3sq"])))


@dataclass(frozen=True)
class RelayMatrixSet:
    """Per-relay encoding matrices, drawn once and shared read-only.

    a1[j] is the T x T matrix of layer-1 relay j.  Layer-2 relays either use
    a2[j] alone (EJHS, MJHS, RSC) or the row-orthonormal T x 2T combiner
    (1/sqrt 2) [a2[j] | a2b[j]] (RMC, RMCKC).
    """

    a1: np.ndarray  # (n, t, t)
    a2: np.ndarray  # (n, t, t)
    a2b: np.ndarray  # (n, t, t)

    @property
    def n_relays(self) -> int:
        return self.a1.shape[0]

    @property
    def t(self) -> int:
        return self.a1.shape[1]

    def wide(self) -> np.ndarray:
        """The stacked T x 2T layer-2 combiners, rows orthonormal."""
        return np.concatenate((self.a2, self.a2b), axis=2) / SQRT2


def draw_relay_matrices(n: int, t: int, family: str, rng) -> RelayMatrixSet:
    """Draw all relay matrices for one run (or one block, per redraw policy)."""
    if family not in MATRIX_FAMILIES:
        raise ValueError(f"matrix family must be one of {MATRIX_FAMILIES}, got {family!r}")
    g = as_generator(rng)
    draw = haar_orthogonal if family == REAL_ORTHOGONAL else haar_unitary
    a1 = np.stack([draw(t, g) for _ in range(n)]).astype(np.complex128)
    a2 = np.stack([draw(t, g) for _ in range(n)]).astype(np.complex128)
    a2b = np.stack([draw(t, g) for _ in range(n)]).astype(np.complex128)
    return RelayMatrixSet(a1=a1, a2=a2, a2b=a2b)


@dataclass(frozen=True)
class SufficientStatistics:
    """Per-block decoder inputs: m_y(s) = g @ s and covariance p_y.

    p_y never depends on the transmitted block, so its factorization can be
    reused across all codebook candidates.  For protocols with two received
    phases the blocks p_x, p_z, p_xz of p_y are kept; EJHS has p_y = p_z.
    """

    protocol: Protocol
    g: np.ndarray  # (y_dim, t)
    p_y: np.ndarray  # (y_dim, y_dim)
    p_x: np.ndarray | None = None
    p_z: np.ndarray | None = None
    p_xz: np.ndarray | None = None

    @property
    def y_dim(self) -> int:
        return self.g.shape[0]

    def mean(self, s: np.ndarray) -> np.ndarray:
        return self.g @ s


def _weighted_matrix_sum(weights: np.ndarray, mats: np.ndarray) -> np.ndarray:
    # sum_j weights[j] * mats[j]
    return np.einsum("j,jab->ab", weights, mats)


def _pair_products(a2x: np.ndarray, a1: np.ndarray) -> np.ndarray:
    # pair[n, i] = a2x[n] @ a1[i]
    return np.einsum("nab,ibc->niac", a2x, a1)


def _gram(v: np.ndarray) -> np.ndarray:
    # sum_i v[i] @ v[i]^H
    return np.einsum("iab,icb->ac", v, v.conj())


def _hermitian_sum(coef: np.ndarray, mats: np.ndarray) -> np.ndarray:
    # sum_j coef[j] * mats[j]^H
    return np.einsum("j,jba->ab", coef, mats.conj())


def _check_dimensions(channels: ChannelRealization, matrices: RelayMatrixSet,
                      factors: TransmitFactors, protocol: Protocol):
    if channels.n_relays != matrices.n_relays:
        raise DimensionMismatch(
            f"channels have {channels.n_relays} relays per layer but matrices have {matrices.n_relays}"
        )
    if Protocol(factors.protocol) is not protocol:
        raise DimensionMismatch(f"factors built for {factors.protocol}, not {protocol}")


def build_statistics(protocol: Protocol, channels: ChannelRealization,
                     matrices: RelayMatrixSet, factors: TransmitFactors) -> SufficientStatistics:
    """Assemble the exact mean operator and covariance for one block.

    Each protocol's destination observation is linear in the transmitted
    block with additive Gaussian noise whose covariance depends only on the
    channels, matrices, and gains, so (G, P_y) is a sufficient statistic.
    """
    protocol = Protocol(protocol)
    _check_dimensions(channels, matrices, factors, protocol)
    t = matrices.t
    eye = np.eye(t)
    hs1, hs2 = channels.h_s1, channels.h_s2
    h1d, h2d = channels.h_1d, channels.h_2d
    h12 = channels.h_12
    a1, a2, a2b = matrices.a1, matrices.a2, matrices.a2b
    c1 = factors.c1

    if protocol is Protocol.MJHS:
        c21, c22 = factors.c21, factors.c22
        gx = c1 * (
            c21 * _weighted_matrix_sum(hs1 * h1d, a1)
            + c22 * _weighted_matrix_sum(hs2 * h2d, a2)
        )
        shared = c21**2 * np.sum(np.abs(h1d) ** 2) + c22**2 * np.sum(np.abs(h2d) ** 2)
        p_x = (1.0 + shared) * eye
        p_xz = shared * eye
        g = np.vstack((gx, gx))
        p_y = np.block([[p_x, p_xz], [p_xz.conj().T, p_x]])
        return SufficientStatistics(protocol, g, p_y, p_x=p_x, p_z=p_x.copy(), p_xz=p_xz)

    c2 = factors.c2
    if protocol is Protocol.EJHS:
        c3 = factors.c3
        pair = _pair_products(a2, a1)
        w = h12.T * hs1[None, :] * h2d[:, None]  # w[n, i] = hs1[i] h12[i, n] h2d[n]
        g = c1 * c2 * c3 * np.einsum("ni,niab->ab", w, pair)
        v = np.einsum("ij,jab->iab", h12 * h2d[None, :], a2)
        p_z = (1.0 + c3**2 * np.sum(np.abs(h2d) ** 2)) * eye + c2**2 * c3**2 * _gram(v)
        return SufficientStatistics(protocol, g, p_z, p_z=p_z)

    if protocol is Protocol.RMC:
        c3 = factors.c3
        gx = c1 * c2 * _weighted_matrix_sum(hs1 * h1d, a1)
        pair = _pair_products(a2b, a1)
        w = h12.T * hs1[None, :] * h2d[:, None]
        gz = (c1 * c3 / SQRT2) * _weighted_matrix_sum(hs2 * h2d, a2) + (
            c1 * c2 * c3 / SQRT2
        ) * np.einsum("ni,niab->ab", w, pair)
        p_x = (1.0 + c2**2 * np.sum(np.abs(h1d) ** 2)) * eye
        v = np.einsum("ij,jab->iab", h12 * h2d[None, :], a2b)
        p_z = (1.0 + c3**2 * np.sum(np.abs(h2d) ** 2)) * eye + (
            0.5 * c2**2 * c3**2
        ) * _gram(v)
        coef = (h1d @ h12.conj()) * h2d.conj()
        p_xz = (c2**2 * c3 / SQRT2) * _hermitian_sum(coef, a2b)

    elif protocol is Protocol.RSC:
        c3, g1, g2 = factors.c3, factors.gamma1, factors.gamma2
        gx = c1 * c2 * _weighted_matrix_sum(hs1 * h1d, a1)
        pair = _pair_products(a2, a1)
        w = h12.T * hs1[None, :] * h2d[:, None]
        gz = c1 * c3 * g1 * _weighted_matrix_sum(hs2 * h2d, a2) + (
            c1 * c2 * c3 * g2
        ) * np.einsum("ni,niab->ab", w, pair)
        p_x = (1.0 + c2**2 * np.sum(np.abs(h1d) ** 2)) * eye
        v = np.einsum("ij,jab->iab", h12 * h2d[None, :], a2)
        p_z = (1.0 + c3**2 * (g1**2 + g2**2) * np.sum(np.abs(h2d) ** 2)) * eye + (
            c2**2 * c3**2 * g2**2
        ) * _gram(v)
        coef = (h1d @ h12.conj()) * h2d.conj()
        p_xz = (c2**2 * c3 * g2) * _hermitian_sum(coef, a2)

    elif protocol is Protocol.RMCKC:
        c3 = factors.c3
        norms = np.linalg.norm(h12, axis=0)  # |h_{1,2j}| over the incoming layer-1 links
        hs1_sq = np.abs(hs1) ** 2
        gx = c1 * c2 * _weighted_matrix_sum(hs1_sq * h1d, a1)
        pair = _pair_products(a2b, a1)
        w = h12.T * hs1_sq[None, :] * (norms * h2d)[:, None]
        gz = (c1 * c3 / SQRT2) * _weighted_matrix_sum(np.abs(hs2) ** 2 * h2d, a2) + (
            c1 * c2 * c3 / SQRT2
        ) * np.einsum("ni,niab->ab", w, pair)
        p_x = (1.0 + c2**2 * np.sum(hs1_sq * np.abs(h1d) ** 2)) * eye
        diag = 1.0 + 0.5 * c3**2 * np.sum(
            (np.abs(hs2) ** 2 + norms**2) * np.abs(h2d) ** 2
        )
        v = np.einsum("ij,jab->iab", h12 * (norms * h2d)[None, :], a2b)
        p_z = diag * eye + (0.5 * c2**2 * c3**2) * np.einsum(
            "i,iab,icb->ac", hs1_sq, v, v.conj()
        )
        coef = norms * h2d.conj() * ((hs1_sq * h1d) @ h12.conj())
        p_xz = (c2**2 * c3 / SQRT2) * _hermitian_sum(coef, a2b)

    else:  # pragma: no cover
        raise ValueError(f"unknown protocol {protocol!r}")

    g = np.vstack((gx, gz))
    p_y = np.block([[p_x, p_xz], [p_xz.conj().T, p_z]])
    return SufficientStatistics(protocol, g, p_y, p_x=p_x, p_z=p_z, p_xz=p_xz)


def _apply_stack(mats: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    # out[j] = mats[j] @ vecs[j]
    return np.einsum("jab,jb->ja", mats, vecs)


def propagate(protocol: Protocol, s: np.ndarray, channels: ChannelRealization,
              matrices: RelayMatrixSet, factors: TransmitFactors,
              noise: NoiseModel) -> dict:
    """Run the full phase-by-phase signal path for one block.

    Returns the relay transmit vectors and destination observations keyed
    by name; `simulate_destination` exposes just the stacked observation.
    Relay transmit vectors t1/t2 are pre-gain (the scalar gain is applied
    on the link), matching how the budgets are defined.
    """
    protocol = Protocol(protocol)
    _check_dimensions(channels, matrices, factors, protocol)
    s = np.asarray(s, dtype=np.complex128)
    if s.shape != (matrices.t,):
        raise DimensionMismatch(f"block must have shape ({matrices.t},), got {s.shape}")
    hs1, hs2 = channels.h_s1, channels.h_s2
    h1d, h2d = channels.h_1d, channels.h_2d
    h12 = channels.h_12
    a1, a2, a2b = matrices.a1, matrices.a2, matrices.a2b
    c1 = factors.c1

    r1_1 = c1 * hs1[:, None] * s[None, :] + noise.u1_phase1  # layer-1 phase-1 receive

    if protocol is Protocol.EJHS:
        c2, c3 = factors.c2, factors.c3
        t1 = _apply_stack(a1, r1_1)
        r2_2 = c2 * np.einsum("ij,ia->ja", h12, t1) + noise.u2_phase2
        t2 = _apply_stack(a2, r2_2)
        z = c3 * np.einsum("j,ja->a", h2d, t2) + noise.ud_phase3
        return {"t1": t1, "t2": t2, "z": z, "y": z}

    r2_1 = c1 * hs2[:, None] * s[None, :] + noise.u2_phase1  # layer-2 phase-1 receive

    if protocol is Protocol.MJHS:
        c21, c22 = factors.c21, factors.c22
        t1 = _apply_stack(a1, r1_1)
        t2 = _apply_stack(a2, r2_1)
        core = c21 * np.einsum("j,ja->a", h1d, t1) + c22 * np.einsum("j,ja->a", h2d, t2)
        x = core + noise.ud_phase2
        z = core + noise.ud_phase3  # same transmit vectors, fresh destination noise
        return {"t1": t1, "t2": t2, "x": x, "z": z, "y": np.concatenate((x, z))}

    c2, c3 = factors.c2, factors.c3

    if protocol is Protocol.RMC:
        t1 = _apply_stack(a1, r1_1)
        r2_2 = c2 * np.einsum("ij,ia->ja", h12, t1) + noise.u2_phase2
        x = c2 * np.einsum("j,ja->a", h1d, t1) + noise.ud_phase2
        t2 = (_apply_stack(a2, r2_1) + _apply_stack(a2b, r2_2)) / SQRT2
    elif protocol is Protocol.RSC:
        g1, g2 = factors.gamma1, factors.gamma2
        t1 = _apply_stack(a1, r1_1)
        r2_2 = c2 * np.einsum("ij,ia->ja", h12, t1) + noise.u2_phase2
        x = c2 * np.einsum("j,ja->a", h1d, t1) + noise.ud_phase2
        t2 = _apply_stack(a2, g1 * r2_1 + g2 * r2_2)
    elif protocol is Protocol.RMCKC:
        t1 = _apply_stack(a1, r1_1) * hs1.conj()[:, None]
        r2_2 = c2 * np.einsum("ij,ia->ja", h12, t1) + noise.u2_phase2
        x = c2 * np.einsum("j,ja->a", h1d, t1) + noise.ud_phase2
        norms = np.linalg.norm(h12, axis=0)
        t2 = (
            _apply_stack(a2, r2_1 * hs2.conj()[:, None])
            + _apply_stack(a2b, r2_2 * norms[:, None])
        ) / SQRT2
    else:  # pragma: no cover
        raise ValueError(f"unknown protocol {protocol!r}")

    z = c3 * np.einsum("j,ja->a", h2d, t2) + noise.ud_phase3
    return {"t1": t1, "t2": t2, "x": x, "z": z, "y": np.concatenate((x, z))}


def simulate_destination(protocol: Protocol, s: np.ndarray, channels: ChannelRealization,
                         matrices: RelayMatrixSet, factors: TransmitFactors,
                         noise: NoiseModel) -> np.ndarray:
    """Destination observation for one block, stacked like the statistics."""
    return propagate(protocol, s, channels, matrices, factors, noise)["y"]


def relay_power_diagnostic(protocol: Protocol, alloc: PowerAllocation, n_relays: int,
                           t: int, codebook, samples: int, rng) -> dict:
    """Monte-Carlo check of the per-relay transmit power against its budget.

    Returns measured average power per symbol per relay and the budget for
    each transmitting layer.  The published gain normalizations do not all
    meet their stated budgets exactly (RMC and RMCKC layer-2 gains are the
    known offenders); this diagnostic makes the actual ratio visible
    instead of silently trusting either side.
    """
    from .channel import draw_block_noise, draw_channels  # local to avoid cycle at import

    protocol = Protocol(protocol)
    g = as_generator(rng)
    factors = transmit_factors(protocol, alloc, n_relays, t)
    if protocol is Protocol.MJHS:
        gain1, gain2 = factors.c21, factors.c22
        budget1, budget2 = alloc.p2 / (2 * n_relays), alloc.p3 / (2 * n_relays)
    else:
        gain1, gain2 = factors.c2, factors.c3
        budget1, budget2 = alloc.p2 / n_relays, alloc.p3 / n_relays

    acc1 = acc2 = 0.0
    for _ in range(samples):
        channels = draw_channels(n_relays, alloc.sigma2sq, g)
        matrices = draw_relay_matrices(n_relays, t, REAL_ORTHOGONAL, g)
        noise = draw_block_noise(n_relays, t, g)
        s = codebook.symbols[g.integers(len(codebook))]
        out = propagate(protocol, s, channels, matrices, factors, noise)
        acc1 += gain1**2 * float(np.mean(np.sum(np.abs(out["t1"]) ** 2, axis=1)))
        acc2 += gain2**2 * float(np.mean(np.sum(np.abs(out["t2"]) ** 2, axis=1)))
    measured1 = acc1 / (samples * t)
    measured2 = acc2 / (samples * t)
    return {
        "layer1": {"measured": measured1, "budget": budget1},
        "layer2": {"measured": measured2, "budget": budget2},
    }
