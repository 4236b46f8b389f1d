"""Optimum power allocation by exhaustive search on the constraint simplex.

The plane p1 + p2 + p3 = P is scanned with granularities (delta, eps): p1
runs over n*delta*P, p2 over m*eps*P with p3 taking the remainder, and the
closed-form receive SNR is evaluated at every grid point.  Ties keep the
first point encountered (lowest n, then lowest m).  A quadratic
least-squares fit of allocation fractions against total power turns the
searched optima into ready-to-use allocation rules.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .protocols import Protocol
from .snr import snr_closed_form

# Guard against 1 - n*delta landing a hair below an exact multiple of eps.
_EDGE_GUARD = 1e-9


class DegenerateFit(Exception):
    """Not enough independent abscissae for a quadratic fit."""


@dataclass(frozen=True)
class GridSpec:
    """Search granularities as fractions of the total power."""

    delta: float = 0.001
    eps: float = 0.001

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0 and 0.0 < self.eps <= 1.0):
            raise ValueError("granularities must lie in (0, 1]")


COARSE_GRID = GridSpec(0.01, 0.01)  # CI-friendly alternative to the default


class GridSearchResult(NamedTuple):
    p1: float
    p2: float
    p3: float
    snr: float


def simplex_grid(total_power: float, grid: GridSpec):
    """All grid points (p1, p2, p3) on the simplex, in search order."""
    n_max = int(np.floor(1.0 / grid.delta + _EDGE_GUARD))
    ns = np.arange(n_max + 1)
    m_counts = np.floor((1.0 - ns * grid.delta) / grid.eps + _EDGE_GUARD).astype(np.int64) + 1
    total = int(m_counts.sum())
    starts = np.concatenate(([0], np.cumsum(m_counts)[:-1]))
    n_arr = np.repeat(ns, m_counts)
    m_arr = np.arange(total) - np.repeat(starts, m_counts)
    p1 = n_arr * (grid.delta * total_power)
    p2 = m_arr * (grid.eps * total_power)
    p3 = np.maximum(total_power - p1 - p2, 0.0)
    p3[p3 <= 1e-12 * total_power] = 0.0  # boundary points are exact zeros
    return p1, p2, p3


def grid_search(protocol: Protocol, total_power: float, sigma2sq: float,
                grid: GridSpec = GridSpec(), n_relays: int = 5) -> GridSearchResult:
    """Maximize the closed-form receive SNR over the simplex grid."""
    if total_power <= 0.0:
        raise ValueError("total power must be positive")
    p1, p2, p3 = simplex_grid(total_power, grid)
    values = snr_closed_form(protocol, p1, p2, p3, sigma2sq, n_relays=n_relays)
    best = int(np.argmax(values))  # first occurrence wins ties
    return GridSearchResult(float(p1[best]), float(p2[best]), float(p3[best]), float(values[best]))


@dataclass(frozen=True)
class FitCoefficients:
    """Quadratic rule value = a + b * x + c * x**2."""

    a: float
    b: float
    c: float

    def __call__(self, x):
        return self.a + self.b * x + self.c * x * x


def fit_quadratic(points: Iterable[tuple[float, float]]) -> FitCoefficients:
    """Least-squares quadratic through (abscissa, value) pairs."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected a sequence of (x, y) pairs")
    x, y = pts[:, 0], pts[:, 1]
    if np.unique(x).size < 3:
        raise DegenerateFit("need at least 3 distinct abscissae")
    vander = np.vander(x, 3, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(vander, y, rcond=None)
    if rank < 3:
        raise DegenerateFit("design matrix is rank deficient")
    return FitCoefficients(a=float(coef[0]), b=float(coef[1]), c=float(coef[2]))


def allocation_table(protocol: Protocol, sigma2sq: float, p_dbs: Sequence[float],
                     grid: GridSpec = GridSpec(), n_relays: int = 5) -> list[dict]:
    """Optimum allocation fractions for each total power point."""
    rows = []
    for p_db in p_dbs:
        total = 10.0 ** (p_db / 10.0)
        res = grid_search(protocol, total, sigma2sq, grid=grid, n_relays=n_relays)
        rows.append(
            {
                "P_dB": float(p_db),
                "p1_frac": res.p1 / total,
                "p2_frac": res.p2 / total,
                "p3_frac": res.p3 / total,
                "snr": res.snr,
            }
        )
    return rows


ALLOCATION_COLUMNS = ("P_dB", "p1_frac", "p2_frac", "p3_frac", "snr")


def write_allocation_csv(rows: list[dict], path, header_comments: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(ALLOCATION_COLUMNS)
        for row in rows:
            writer.writerow([repr(float(row[c])) for c in ALLOCATION_COLUMNS])
