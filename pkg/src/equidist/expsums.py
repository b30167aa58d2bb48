"""Complete families of exponential sums over a finite field.

Each family is stored as a ``SumFamily`` whose ``values`` array is indexed by
the parameter: a in F_q (by element code) for additive families, or the
character index j = 1..q-2 for the Mellin family.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Sequence

import numpy as np

from .errors import CostGuard, EvenCharacteristic, ValueOutOfRange
from .ff import FieldContext, _check_divides, poly_roots_mod, roots_of_unity

ADDITIVE_KINDS = ("gaussian_period", "rootset", "kloosterman", "subgroup_normalized")


@dataclass(frozen=True, eq=False)
class SumFamily:
    field: FieldContext = dc_field(repr=False)
    kind: str
    params: dict
    values: np.ndarray = dc_field(repr=False)
    index: np.ndarray = dc_field(repr=False)
    normalization: float = 1.0

    def __len__(self) -> int:
        return len(self.values)

    @property
    def q(self) -> int:
        return self.field.q

    def is_real(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.values.imag) <= tol))


def _e(x: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * x)


def _require_prime_field(ctx: FieldContext, what: str) -> None:
    if ctx.n != 1:
        raise ValueOutOfRange(f"{what} is defined here for prime fields only (n = 1)")


def _residue_sums(ctx: FieldContext, residues: Sequence[int], chunk: int = 1 << 22) -> np.ndarray:
    """values[a] = sum over x in residues of e(a x / q), for a = 0..q-1."""
    q = ctx.q
    xs = np.asarray(residues, dtype=np.int64)
    a = np.arange(q, dtype=np.int64)
    out = np.zeros(q, dtype=np.complex128)
    step = max(1, chunk // max(1, len(xs)))
    # integer phases keep exact reduction mod q
    for s in range(0, q, step):
        blk = a[s : s + step, None] * xs[None, :] % q
        out[s : s + step] = _e(blk / q).sum(axis=1)
    return out


def gaussian_period_family(ctx: FieldContext, d: int) -> SumFamily:
    """S_d(q, a) = sum_{x in mu_d} e(a x / q)."""
    _require_prime_field(ctx, "gaussian_period_family")
    _check_divides(ctx, d)
    vals = _residue_sums(ctx, roots_of_unity(ctx, d))
    return SumFamily(ctx, "gaussian_period", {"d": int(d)}, vals, np.arange(ctx.q), 1.0)


def rootset_family(ctx: FieldContext, g: Sequence[int]) -> SumFamily:
    """Sum of e(a x / q) over the roots of g mod q; g must split with simple roots."""
    _require_prime_field(ctx, "rootset_family")
    roots = poly_roots_mod(ctx, g, require_split=True)
    vals = _residue_sums(ctx, roots.roots)
    return SumFamily(ctx, "rootset", {"g": [int(c) for c in g]}, vals, np.arange(ctx.q), 1.0)


def subgroup_family_normalized(ctx: FieldContext, d: int) -> SumFamily:
    fam = gaussian_period_family(ctx, d)
    s = 1.0 / np.sqrt(d)
    return SumFamily(ctx, "subgroup_normalized", {"d": int(d)}, fam.values * s, fam.index, s)


def kloosterman_family(ctx: FieldContext, r: int = 2) -> SumFamily:
    """Normalized hyper-Kloosterman sums Kl_r(a) for all a in F_q.

    With f(k) = psi(g^k), the unnormalized sum at g^m is the r-fold cyclic
    convolution of f at m, evaluated with one FFT of length q - 1. The slot
    a = 0 holds 0 (empty sum: no tuple of units has product 0).
    """
    if r < 2:
        raise ValueOutOfRange("r must be >= 2")
    q = ctx.q
    if q < 3:
        raise ValueOutOfRange("need q >= 3")
    f = ctx.psi(ctx.exp_table)
    conv = np.fft.ifft(np.fft.fft(f) ** r)
    vals = np.zeros(q, dtype=np.complex128)
    norm = float(q) ** (-(r - 1) / 2)
    vals[ctx.exp_table] = conv * norm
    return SumFamily(ctx, "kloosterman", {"r": int(r)}, vals, np.arange(q), norm)


def kloosterman_direct(ctx: FieldContext, r: int, a: int) -> complex:
    """Brute-force Kl_r(a): nested sum over x_1..x_{r-1} in F_q^x."""
    q = ctx.q
    if float(q) ** (r - 1) > 1e8:
        raise CostGuard(f"q^(r-1) = {q}^{r - 1} exceeds 1e8")
    a = int(a)
    if a == 0:
        return 0j
    units = np.arange(1, q, dtype=np.int64)
    total = 0j
    for head in itertools.product(units.tolist(), repeat=r - 2):
        prod = 1
        s = 0
        for x in head:
            prod = int(ctx.mul(prod, x))
            s = int(ctx.add(s, x))
        # last free variable x_{r-1} vectorized, x_r = a / (prod * x_{r-1})
        denom = ctx.mul(prod, units)
        xr = ctx.mul(a, ctx.inv(denom))
        total += ctx.psi(ctx.add(ctx.add(s, units), xr)).sum()
    return complex(total * float(q) ** (-(r - 1) / 2))


def mellin_family(ctx: FieldContext) -> SumFamily:
    """R(chi_j) = p^(-1/2) sum_{x != 0, 1} chi_j(x) psi((x+1)/(x-1)), j = 1..p-2."""
    _require_prime_field(ctx, "mellin_family")
    p = ctx.p
    if p == 2:
        raise EvenCharacteristic("the Mellin family needs odd p")
    if p == 3:
        raise ValueOutOfRange("p = 3 has a single nontrivial character and no useful family")
    k = np.arange(p - 1, dtype=np.int64)
    x = ctx.exp_table[k]
    h = np.zeros(p - 1, dtype=np.complex128)
    m = x != 1
    num = ctx.add(x[m], 1)
    den = ctx.inv(ctx.sub(x[m], 1))
    h[m] = ctx.psi(ctx.mul(num, den))
    # sum_k e(jk/(p-1)) h(k) is (p-1) * ifft(h)[j]
    vals = np.fft.ifft(h) * (p - 1) / np.sqrt(p)
    return SumFamily(ctx, "mellin", {}, vals[1:], np.arange(1, p - 1), 1.0 / np.sqrt(p))


def mellin_direct(ctx: FieldContext, j: int) -> complex:
    """Direct sum for one character; test oracle."""
    p = ctx.p
    xs = np.arange(2, p, dtype=np.int64)
    val = ctx.psi(ctx.mul(ctx.add(xs, 1), ctx.inv(ctx.sub(xs, 1))))
    return complex((ctx.chi(j, xs) * val).sum() / np.sqrt(p))


@dataclass(frozen=True, eq=False)
class TorusOrbit:
    """Points (a x / q mod 1)_{x in Z} for a = 0..q-1, stored as integer numerators."""

    q: int
    residues: tuple[int, ...]
    numerators: np.ndarray = dc_field(repr=False)

    @property
    def k(self) -> int:
        return len(self.residues)

    @property
    def points(self) -> np.ndarray:
        return self.numerators / self.q


def torus_orbit(ctx: FieldContext, residues: Sequence[int], sort: bool = True) -> TorusOrbit:
    """Orbit of the residue vector. ``sort=False`` keeps a caller-supplied order."""
    _require_prime_field(ctx, "torus_orbit")
    q = ctx.q
    res = tuple(int(x) % q for x in residues)
    if sort:
        res = tuple(sorted(res))
    a = np.arange(q, dtype=np.int64)
    num = a[:, None] * np.asarray(res, dtype=np.int64)[None, :] % q
    num.setflags(write=False)
    return TorusOrbit(q, res, num)


def weyl_sum(orbit: TorusOrbit, alpha: Sequence[int]) -> complex:
    """(1/q) sum_a e(alpha . point_a)."""
    alpha = np.asarray(alpha, dtype=np.int64)
    if alpha.shape != (orbit.k,):
        raise ValueOutOfRange(f"alpha must have length {orbit.k}")
    phase = (orbit.numerators @ (alpha % orbit.q)) % orbit.q
    return complex(_e(phase / orbit.q).mean())


def su2_character(values: np.ndarray, n: int) -> np.ndarray:
    """chi_n(theta) = sin((n+1) theta) / sin(theta) at 2cos(theta) = values.

    Evaluated through the recurrence X_{k+1} = v X_k - X_{k-1}, X_0 = 1,
    X_1 = v, which is the same polynomial and is regular at theta = 0, pi.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size and np.max(np.abs(v)) > 2 + 1e-9:
        raise ValueOutOfRange("values must lie in [-2, 2]")
    prev = np.ones_like(v)
    if n == 0:
        return prev
    cur = v.copy()
    for _ in range(n - 1):
        prev, cur = cur, v * cur - prev
    return cur


def su2_weyl_diagnostic(values, n: int) -> complex:
    """Mean of chi_n over the family values."""
    if n < 1:
        raise ValueOutOfRange("n must be >= 1")
    v = np.asarray(values)
    if np.iscomplexobj(v):
        if np.max(np.abs(v.imag), initial=0.0) > 1e-9:
            raise ValueOutOfRange("values must be real")
        v = v.real
    return complex(np.mean(su2_character(v, n)))
