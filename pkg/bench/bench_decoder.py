#!/usr/bin/env python3
"""Benchmark the whitened-metric kernel: compiled extension vs NumPy fallback.

The kernel is the inner loop of ML decoding (one codebook scan per received
block), so its throughput directly bounds BER-run speed.  Representative
workload: T = 5, N = 5, M = 2, so 1024 candidates against a 10-dimensional
whitened observation.

Run:  python bench/bench_decoder.py [--repeats 2000]
"""

import argparse
import time

import numpy as np

from dstc_sim import _whiten_np
from dstc_sim.channel import draw_block_noise, draw_channels
from dstc_sim.harness import RunConfig, run_ber
from dstc_sim.numerics import SeededStream, cholesky_psd
from dstc_sim.protocols import (
    REAL_ORTHOGONAL,
    PowerAllocation,
    Protocol,
    build_statistics,
    draw_relay_matrices,
    simulate_destination,
    transmit_factors,
)
from dstc_sim.signal import build_codebook
from dstc_sim.whiten import backend_name

try:
    from dstc_sim import _whiten_cy
except ImportError:
    _whiten_cy = None


def block_workload(n=5, t=5, seed=1):
    g = SeededStream(seed).generator()
    alloc = PowerAllocation.equal_split(10.0 ** 1.5, 0.5)
    channels = draw_channels(n, alloc.sigma2sq, g)
    matrices = draw_relay_matrices(n, t, REAL_ORTHOGONAL, g)
    factors = transmit_factors(Protocol.RMC, alloc, n, t)
    stats = build_statistics(Protocol.RMC, channels, matrices, factors)
    codebook = build_codebook(t, 2)
    noise = draw_block_noise(n, t, g)
    y = simulate_destination(Protocol.RMC, codebook.symbols[17], channels, matrices, factors, noise)
    lower = np.ascontiguousarray(cholesky_psd(stats.p_y).lower)
    means = np.ascontiguousarray(codebook.symbols @ stats.g.T)
    return lower, np.ascontiguousarray(y), means


def time_kernel(fn, lower, y, means, repeats):
    fn(lower, y, means)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        out = fn(lower, y, means)
    elapsed = time.perf_counter() - start
    return elapsed / repeats, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()

    lower, y, means = block_workload()
    print(f"workload: {means.shape[0]} candidates, dimension {y.shape[0]}")
    print(f"active backend at import: {backend_name()}\n")

    per_np, ref = time_kernel(_whiten_np.whitened_metrics, lower, y, means, args.repeats)
    rows = [("numpy fallback", per_np, 1.0)]
    if _whiten_cy is not None:
        per_cy, out = time_kernel(_whiten_cy.whitened_metrics, lower, y, means, args.repeats)
        assert int(np.argmin(out)) == int(np.argmin(ref)), "backends disagree"
        rows.append(("compiled (cython)", per_cy, per_np / per_cy))
    else:
        print("compiled extension not available; benchmarking fallback only")

    print(f"{'backend':<20}{'per call':>12}{'scans/s':>12}{'speedup':>10}")
    for name, per_call, speedup in rows:
        print(f"{name:<20}{per_call * 1e6:>10.1f}us{1.0 / per_call:>12.0f}{speedup:>9.1f}x")

    # end-to-end effect on a small BER run (decode is one cost among several)
    config = RunConfig(protocol=Protocol.RMC, sigma2sq=0.5, p_dbs=(15.0,), blocks=400, seed=2)
    start = time.perf_counter()
    run_ber(config)
    total = time.perf_counter() - start
    print(f"\nend-to-end: 400 RMC blocks at T=N=5 in {total:.2f}s "
          f"({400 / total:.0f} blocks/s with the {backend_name()} backend)")


if __name__ == "__main__":
    main()
