"""W1 on the circle R/Z.

W1 = min_c int_0^1 |F_mu(x) - F_nu(x) - c| dx; the minimizing c is a median
of the values of D = F_mu - F_nu under Lebesgue measure on [0, 1).
"""

from __future__ import annotations

import numpy as np

from ..errors import ValueOutOfRange
from ..measures import EmpiricalCircle, LebesgueCircle


def _weighted_median(vals: np.ndarray, w: np.ndarray) -> float:
    order = np.argsort(vals, kind="stable")
    cw = np.cumsum(w[order])
    i = int(np.searchsorted(cw, 0.5 * cw[-1], side="left"))
    return float(vals[order][min(i, len(vals) - 1)])


def _emp_emp(mu: EmpiricalCircle, nu: EmpiricalCircle) -> float:
    grid = np.union1d(np.union1d(mu.atoms, nu.atoms), [0.0, 1.0])
    left = grid[:-1]
    L = np.diff(grid)
    D = mu.cdf(left) - nu.cdf(left)
    c = _weighted_median(D, L)
    return float(np.sum(L * np.abs(D - c)))


def _emp_lebesgue(mu: EmpiricalCircle) -> float:
    # on [x_k, x_{k+1}) D(x) = C_k - x decreases linearly from v0 to v1 = v0 - L_k
    grid = np.union1d(mu.atoms, [0.0, 1.0])
    xl, xr = grid[:-1], grid[1:]
    L = xr - xl
    C = mu.cdf(xl)
    v0, v1 = C - xl, C - xr

    def below(c):  # Lebesgue measure of {D < c}
        return np.sum(np.clip(c - v1, 0.0, L))

    lo, hi = float(v1.min()), float(v0.max())
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if below(mid) < 0.5:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-17:
            break
    c = 0.5 * (lo + hi)
    a, b = v0 - c, v1 - c  # a >= b on each piece
    same = (a >= 0) & (b >= 0) | (a <= 0) & (b <= 0)
    piece = np.where(same, L * np.abs(0.5 * (a + b)), 0.5 * (a * a + b * b))
    return float(piece.sum())


def w1_circle(mu, nu) -> float:
    if isinstance(mu, LebesgueCircle):
        mu, nu = nu, mu
    if not isinstance(mu, EmpiricalCircle):
        raise ValueOutOfRange("w1_circle needs an EmpiricalCircle")
    if isinstance(nu, LebesgueCircle):
        return _emp_lebesgue(mu)
    if isinstance(nu, EmpiricalCircle):
        return _emp_emp(mu, nu)
    raise ValueOutOfRange(f"unsupported circle measure {type(nu).__name__}")
