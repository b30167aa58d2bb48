"""Closed-form rate constants and the SU(2) Fourier diagnostic."""

from __future__ import annotations

import math
from typing import Sequence

from ..errors import ValueOutOfRange


def rate_bound_constant(z_size: int, field_degree: int, C_Z: float = 1.0) -> tuple[float, float]:
    """(4 sqrt(3) sqrt|Z| (|Z|+1) C_Z^(1/deg), 1/deg)."""
    if z_size < 1 or field_degree < 1 or C_Z <= 0:
        raise ValueOutOfRange("need z_size >= 1, field_degree >= 1 and C_Z > 0")
    const = math.sqrt(48 * z_size) * (z_size + 1) * C_Z ** (1.0 / field_degree)
    return const, 1.0 / field_degree


def euler_phi(d: int) -> int:
    out, n, p = d, d, 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            out -= out // p
        p += 1
    if n > 1:
        out -= out // n
    return out


def subgroup_rate_bound(q: int, d: int) -> float:
    """Bound on W1(mu_{q,d}, gamma_d) for mu_d: 4 sqrt(3) sqrt(d) (d+1) q^(-1/phi(d))."""
    const, expo = rate_bound_constant(d, euler_phi(d), 1.0)
    return const * q ** (-expo)


def su2_borda_diagnostic(weyl_values: Sequence[complex], T: int | None = None) -> float:
    """1/T + (sum_{n=1}^T |W_n|^2 / (n (n+2)))^(1/2).

    Diagnostic only: the normalization n(n+2) is a convention and the
    implied constant of the underlying inequality is not certified.
    """
    vals = list(weyl_values)
    T = len(vals) if T is None else int(T)
    if T < 1 or len(vals) < T:
        raise ValueOutOfRange("need T >= 1 Weyl values")
    s = sum(abs(vals[n - 1]) ** 2 / (n * (n + 2)) for n in range(1, T + 1))
    return 1.0 / T + math.sqrt(s)
