"""Fourier-side upper bound for W1 on the torus (R/Z)^k.

For T > 0 the bound is 4 sqrt(3) sqrt(k) / T plus the l2 norm of
(hat mu(h) - hat nu(h)) / |h| over the lattice points 1 <= |h|_inf <= T.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import LatticeGuard, ValueOutOfRange
from ..measures import EmpiricalCircle, EmpiricalTorus, LebesgueCircle, LebesgueTorus
from .result import FourierBoundReport

LATTICE_GUARD = 10**7
HEAD = 4.0 * math.sqrt(3.0)


def _as_torus(m):
    if isinstance(m, EmpiricalCircle):
        return m.as_torus()
    if isinstance(m, LebesgueCircle):
        return LebesgueTorus(1)
    if isinstance(m, (EmpiricalTorus, LebesgueTorus)):
        return m
    raise ValueOutOfRange(f"unsupported torus measure {type(m).__name__}")


def _lattice(k: int, T: int) -> np.ndarray:
    """Integer vectors with 1 <= |h|_inf <= T, one from each pair {h, -h}."""
    axes = [np.arange(-T, T + 1)] * k
    H = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    nz = np.any(H != 0, axis=1)
    H = H[nz]
    # keep h whose first nonzero coordinate is positive
    first = H[np.arange(len(H)), np.argmax(H != 0, axis=1)]
    return H[first > 0]


def _weighted_diffs(mu, nu, T: int):
    """Per-lattice-point |hat mu - hat nu|^2 / |h|^2 and |h|_inf, one per +-h pair."""
    k = mu.k if isinstance(mu, EmpiricalTorus) else nu.k
    if k * (2 * T + 1) ** k > LATTICE_GUARD:
        raise LatticeGuard(f"k (2T+1)^k = {k * (2 * T + 1) ** k} exceeds {LATTICE_GUARD}")
    H = _lattice(k, T)
    if len(H) == 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    diff = mu.fourier(H) - nu.fourier(H)
    w = np.abs(diff) ** 2 / np.sum(H * H, axis=1)
    return 2.0 * w, np.max(np.abs(H), axis=1)


def fourier_bound_torus(mu, nu, T: float, scan: bool = False, scan_points: int = 24) -> FourierBoundReport:
    """Evaluate the bound at T; with ``scan`` also minimize over a log grid up to T."""
    mu, nu = _as_torus(mu), _as_torus(nu)
    if T <= 0:
        raise ValueOutOfRange("T must be positive")
    k = mu.k if isinstance(mu, EmpiricalTorus) else nu.k
    Tmax = int(math.floor(T))
    w, hinf = _weighted_diffs(mu, nu, Tmax)
    head = HEAD * math.sqrt(k) / T
    tail = math.sqrt(float(np.sum(w)))
    report = FourierBoundReport(T=float(T), k=k, head_term=head, tail_term=tail, bound=head + tail)
    if scan:
        # partial sums by shell |h|_inf = s, then the bound at each grid T
        shell = np.bincount(hinf, weights=w, minlength=Tmax + 1)
        csum = np.cumsum(shell)
        grid = np.unique(np.round(np.geomspace(1, max(T, 1), scan_points), 6))
        rows = []
        for t in grid:
            tail_t = math.sqrt(float(csum[int(math.floor(t))]))
            rows.append([float(t), HEAD * math.sqrt(k) / t + tail_t])
        best = min(rows, key=lambda r: r[1])
        report.scan = rows
        report.optimal_T, report.optimal_bound = best
    return report
