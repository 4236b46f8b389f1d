"""Monte-Carlo BER measurement with deterministic seeding and parallel blocks.

Each simulated block gets its own random stream derived injectively from
(base seed, power index, block index), so results are reproducible bit for
bit regardless of execution order or worker count.  Blocks are processed
in fixed-size chunks whose partial tallies are reduced in chunk order;
the sequential path uses the same chunking, which makes parallel and
sequential runs byte-identical.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import __version__
from .channel import draw_block_noise, draw_channels
from .decoder import ml_decode
from .numerics import SeededStream, cholesky_psd
from .powalloc import GridSpec, grid_search
from .protocols import (
    MATRIX_FAMILIES,
    REAL_ORTHOGONAL,
    PowerAllocation,
    Protocol,
    build_statistics,
    draw_relay_matrices,
    simulate_destination,
    transmit_factors,
)
from .signal import build_codebook, count_bit_errors
from .whiten import backend_name

Z_95 = 1.959963984540054

ALLOCATION_MODES = ("grid-search", "explicit", "equal-split")
REDRAW_POLICIES = ("per-run", "per-block")

# Stream-index layout: blocks occupy p_index * 2^32 + block_index; the
# per-run relay matrices live far above that range.
BLOCK_INDEX_SPAN = 1 << 32
MATRIX_STREAM = 1 << 62

DEFAULT_CHUNK = 64

BER_COLUMNS = (
    "protocol",
    "sigma2sq",
    "P_dB",
    "p1",
    "p2",
    "p3",
    "blocks",
    "bit_errors",
    "ber",
    "ci_low",
    "ci_high",
)


@dataclass(frozen=True)
class RunConfig:
    """Everything one BER run depends on; hashable into the outputs."""

    protocol: Protocol
    sigma2sq: float
    p_dbs: tuple[float, ...]
    blocks: int
    seed: int
    t: int = 5
    n_relays: int = 5
    m: int = 2
    allocation: str | None = None  # None: equal-split for EJHS, grid-search otherwise
    p1: float | None = None
    p2: float | None = None
    p3: float | None = None
    matrix_family: str = REAL_ORTHOGONAL
    matrix_redraw: str = "per-run"
    grid_delta: float = 0.001
    grid_eps: float = 0.001

    def allocation_mode(self) -> str:
        if self.allocation is not None:
            return self.allocation
        return "equal-split" if Protocol(self.protocol) is Protocol.EJHS else "grid-search"

    def validate(self) -> list[str]:
        """Field-by-field problems, empty when the config is runnable."""
        problems = []
        try:
            Protocol(self.protocol)
        except ValueError:
            problems.append(f"protocol: unknown value {self.protocol!r}")
        if not 0.0 <= self.sigma2sq <= 1.0:
            problems.append(f"sigma2sq: {self.sigma2sq} outside [0, 1]")
        if len(self.p_dbs) == 0:
            problems.append("P_dB: list must be nonempty")
        if self.blocks < 1:
            problems.append(f"blocks: {self.blocks} must be >= 1")
        if self.blocks > BLOCK_INDEX_SPAN:
            problems.append(f"blocks: {self.blocks} exceeds the stream index span")
        if self.t < 1:
            problems.append(f"T: {self.t} must be >= 1")
        if self.n_relays < 1:
            problems.append(f"N: {self.n_relays} must be >= 1")
        if self.m < 2 or self.m % 2:
            problems.append(f"M: {self.m} must be even and >= 2")
        if self.allocation is not None and self.allocation not in ALLOCATION_MODES:
            problems.append(f"allocation: {self.allocation!r} not one of {ALLOCATION_MODES}")
        if self.matrix_family not in MATRIX_FAMILIES:
            problems.append(f"matrix_family: {self.matrix_family!r} not one of {MATRIX_FAMILIES}")
        if self.matrix_redraw not in REDRAW_POLICIES:
            problems.append(f"matrix_redraw: {self.matrix_redraw!r} not one of {REDRAW_POLICIES}")
        if not (0.0 < self.grid_delta <= 1.0 and 0.0 < self.grid_eps <= 1.0):
            problems.append("grid_delta/grid_eps: must lie in (0, 1]")
        if self.allocation == "explicit":
            missing = [k for k in ("p1", "p2", "p3") if getattr(self, k) is None]
            if missing:
                problems.append(f"{'/'.join(missing)}: required in explicit allocation mode")
            elif min(self.p1, self.p2, self.p3) < 0:
                problems.append("p1/p2/p3: must be nonnegative")
            else:
                for p_db in self.p_dbs:
                    total = 10.0 ** (p_db / 10.0)
                    if abs(self.p1 + self.p2 + self.p3 - total) > 1e-9 * max(1.0, total):
                        problems.append(
                            f"p1+p2+p3: {self.p1 + self.p2 + self.p3} does not equal "
                            f"P = {total} at P_dB = {p_db}"
                        )
        return problems

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["protocol"] = Protocol(self.protocol).value
        d["p_dbs"] = list(self.p_dbs)
        return d


@dataclass(frozen=True)
class BerResult:
    """Aggregated outcome of one power point."""

    protocol: Protocol
    sigma2sq: float
    p_db: float
    p1: float
    p2: float
    p3: float
    blocks: int
    bits_total: int
    bit_errors: int
    ber: float
    ci_low: float
    ci_high: float
    snr_empirical: float
    jitter_events: int

    @property
    def ci_half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)


def seed_for_block(base_seed: int, p_index: int, block_index: int) -> SeededStream:
    """Injective (power point, block) -> stream mapping."""
    if p_index < 0 or block_index < 0:
        raise ValueError("indices must be nonnegative")
    if block_index >= BLOCK_INDEX_SPAN:
        raise ValueError(f"block index must be below {BLOCK_INDEX_SPAN}")
    return SeededStream(seed=base_seed, stream=p_index * BLOCK_INDEX_SPAN + block_index)


def wilson_interval(errors: int, trials: int, z: float = Z_95):
    """Wilson score interval; well behaved at the low error rates BER runs hit."""
    if trials <= 0:
        return 0.0, 1.0
    phat = errors / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials)) / denom
    lo = 0.0 if errors == 0 else max(0.0, center - half)  # exact at the boundary
    hi = 1.0 if errors == trials else min(1.0, center + half)
    return lo, hi


def resolve_allocation(config: RunConfig, total_power: float) -> PowerAllocation:
    """Power split for one power point per the configured mode."""
    mode = config.allocation_mode()
    if mode == "equal-split":
        return PowerAllocation.equal_split(total_power, config.sigma2sq)
    if mode == "explicit":
        return PowerAllocation(config.p1, config.p2, config.p3, config.sigma2sq)
    res = grid_search(
        Protocol(config.protocol),
        total_power,
        config.sigma2sq,
        grid=GridSpec(config.grid_delta, config.grid_eps),
        n_relays=config.n_relays,
    )
    return PowerAllocation(res.p1, res.p2, res.p3, config.sigma2sq)


def _simulate_chunk(task: dict) -> dict:
    """Simulate a contiguous block range; runs in worker processes."""
    protocol = Protocol(task["protocol"])
    t, n, m = task["t"], task["n_relays"], task["m"]
    codebook = build_codebook(t, m)
    alloc = PowerAllocation(*task["alloc"], task["sigma2sq"])
    factors = transmit_factors(protocol, alloc, n, t)
    matrices = task["matrices"]
    per_block = matrices is None

    bit_errors = 0
    signal_energy = 0.0
    noise_energy = 0.0
    jitter_events = 0
    for block in range(task["start"], task["stop"]):
        g = seed_for_block(task["seed"], task["p_index"], block).generator()
        s_index = int(g.integers(len(codebook)))
        channels = draw_channels(n, task["sigma2sq"], g)
        noise = draw_block_noise(n, t, g)
        if per_block:
            matrices = draw_relay_matrices(n, t, task["matrix_family"], g)
        stats = build_statistics(protocol, channels, matrices, factors)
        factor = cholesky_psd(stats.p_y)
        s = codebook.symbols[s_index]
        y = simulate_destination(protocol, s, channels, matrices, factors, noise)
        decoded = ml_decode(y, stats, codebook, factor=factor)
        bit_errors += count_bit_errors(s_index, decoded, codebook)
        mean = stats.mean(s)
        signal_energy += float(np.real(np.vdot(mean, mean)))
        noise_energy += float(np.real(np.vdot(y - mean, y - mean)))
        if factor.jitter > 0.0:
            jitter_events += 1
    return {
        "bit_errors": bit_errors,
        "signal_energy": signal_energy,
        "noise_energy": noise_energy,
        "jitter_events": jitter_events,
    }


def run_ber(config: RunConfig, threads: int = 1, chunk_size: int = DEFAULT_CHUNK) -> list[BerResult]:
    """Measure BER at every configured power point.

    `threads` is the worker process count; any value produces identical
    results because per-block streams are independent and partial tallies
    are reduced in a fixed order.
    """
    problems = config.validate()
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    protocol = Protocol(config.protocol)
    codebook = build_codebook(config.t, config.m)

    matrices_run = None
    if config.matrix_redraw == "per-run":
        matrices_run = draw_relay_matrices(
            config.n_relays,
            config.t,
            config.matrix_family,
            SeededStream(config.seed, MATRIX_STREAM),
        )

    results = []
    for p_index, p_db in enumerate(config.p_dbs):
        total = 10.0 ** (p_db / 10.0)
        alloc = resolve_allocation(config, total)
        tasks = [
            {
                "protocol": protocol.value,
                "t": config.t,
                "n_relays": config.n_relays,
                "m": config.m,
                "sigma2sq": config.sigma2sq,
                "alloc": (alloc.p1, alloc.p2, alloc.p3),
                "seed": config.seed,
                "p_index": p_index,
                "start": start,
                "stop": min(start + chunk_size, config.blocks),
                "matrix_family": config.matrix_family,
                "matrices": matrices_run,
            }
            for start in range(0, config.blocks, chunk_size)
        ]
        if threads > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
                partials = list(pool.map(_simulate_chunk, tasks))
        else:
            partials = [_simulate_chunk(task) for task in tasks]

        bit_errors = sum(p["bit_errors"] for p in partials)
        signal_energy = sum(p["signal_energy"] for p in partials)
        noise_energy = sum(p["noise_energy"] for p in partials)
        jitter_events = sum(p["jitter_events"] for p in partials)
        bits_total = config.blocks * codebook.bits_per_block
        ci_low, ci_high = wilson_interval(bit_errors, bits_total)
        results.append(
            BerResult(
                protocol=protocol,
                sigma2sq=config.sigma2sq,
                p_db=float(p_db),
                p1=alloc.p1,
                p2=alloc.p2,
                p3=alloc.p3,
                blocks=config.blocks,
                bits_total=bits_total,
                bit_errors=bit_errors,
                ber=bit_errors / bits_total,
                ci_low=ci_low,
                ci_high=ci_high,
                snr_empirical=signal_energy / noise_energy if noise_energy else 0.0,
                jitter_events=jitter_events,
            )
        )
    return results


def config_hash(config_dict: dict) -> str:
    """Stable hash of a configuration mapping."""
    canon = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _fmt(value) -> str:
    return repr(float(value))


def write_ber_csv(results: list[BerResult], path, header_comments=()) -> None:
    """CSV emission; bit-stable for a fixed config and seed."""
    with open(path, "w", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(BER_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    Protocol(r.protocol).value,
                    _fmt(r.sigma2sq),
                    _fmt(r.p_db),
                    _fmt(r.p1),
                    _fmt(r.p2),
                    _fmt(r.p3),
                    str(r.blocks),
                    str(r.bit_errors),
                    _fmt(r.ber),
                    _fmt(r.ci_low),
                    _fmt(r.ci_high),
                ]
            )


def write_manifest(path, config_dicts: list[dict], threads: int, created_utc: str) -> None:
    """Run manifest; the timestamp lives here and only here."""
    payload = {
        "configs": config_dicts,
        "config_hash": config_hash({"configs": config_dicts}),
        "code_version": __version__,
        "decoder_backend": backend_name(),
        "threads": threads,
        "created_utc": created_utc,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
