"""Finite fields F_q with q = p^n, backed by exp/log tables.

Elements are encoded as integers: for n = 1 the residue itself, for n > 1 the
code sum(c_i * p**i) of the coefficient vector (c_0, ..., c_{n-1}) of the
element in the basis 1, t, ..., t^{n-1} of F_p[t]/(f).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import (
    FieldTooLarge,
    NoIrreducibleFound,
    NotPrime,
    NotTotallySplit,
    OrderDoesNotDivide,
    ValueOutOfRange,
)

DEFAULT_TABLE_CAP = 2**24

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    n = int(n)
    if n < 2:
        return False
    for b in _MR_BASES:
        if n % b == 0:
            return n == b
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for b in _MR_BASES:
        x = pow(b, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division."""
    n = int(n)
    out: dict[int, int] = {}
    f = 2
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += 1 if f == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def primes_in_range(lo: int, hi: int, modulus: int = 1, residue: int = 0) -> list[int]:
    """Primes in [lo, hi] congruent to residue mod modulus (sieve)."""
    if hi < 2:
        return []
    sieve = np.ones(hi + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, int(hi**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = False
    ps = np.nonzero(sieve)[0]
    ps = ps[ps >= lo]
    if modulus > 1:
        ps = ps[ps % modulus == residue % modulus]
    return [int(x) for x in ps]


# --- polynomials over F_p, coefficient lists in ascending order -------------


def _ptrim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a: list[int], m: list[int], p: int) -> list[int]:
    a = _ptrim([x % p for x in a])
    dm = len(m) - 1
    inv = pow(m[-1], -1, p)
    while len(a) - 1 >= dm:
        c = a[-1] * inv % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _ptrim(a)
    return a


def _pmulmod(a: list[int], b: list[int], m: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _pmod(out, m, p)


def _ppowmod(a: list[int], e: int, m: list[int], p: int) -> list[int]:
    result = [1]
    base = _pmod(list(a), m, p)
    while e:
        if e & 1:
            result = _pmulmod(result, base, m, p)
        base = _pmulmod(base, base, m, p)
        e >>= 1
    return result


def _pgcd(a: list[int], b: list[int], p: int) -> list[int]:
    a = _ptrim([x % p for x in a])
    b = _ptrim([x % p for x in b])
    while b:
        a, b = b, _pmod(a, b, p)
    if a:
        inv = pow(a[-1], -1, p)
        a = [x * inv % p for x in a]
    return a


def _psub(a: list[int], b: list[int], p: int) -> list[int]:
    n = max(len(a), len(b))
    out = [((a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)) % p for i in range(n)]
    return _ptrim(out)


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """Rabin's test for a monic f of degree n over F_p."""
    f = [int(c) % p for c in f]
    n = len(f) - 1
    if n < 1 or f[-1] != 1:
        return False
    if n == 1:
        return True
    t = [0, 1]
    # t^(p^k) mod f by repeated p-th powers
    powers = [t]
    for _ in range(n):
        powers.append(_ppowmod(powers[-1], p, f, p))
    if _psub(powers[n], t, p):
        return False
    for r in factorize(n):
        g = _pgcd(f, _psub(powers[n // r], t, p), p)
        if len(g) != 1:
            return False
    return True


def first_irreducible(p: int, n: int) -> tuple[int, ...]:
    """First monic irreducible of degree n, lexicographic in (c_{n-1}, ..., c_0)."""
    for tail in itertools.product(range(p), repeat=n):
        coeffs = list(reversed(tail)) + [1]
        if coeffs[0] == 0:
            continue
        if is_irreducible(coeffs, p):
            return tuple(coeffs)
    raise NoIrreducibleFound(f"no irreducible of degree {n} over F_{p}")


@njit(cache=True)
def _ext_exp_table(p, n, modulus, gcoef, q):
    out = np.empty(q - 1, dtype=np.int64)
    cur = np.zeros(n, dtype=np.int64)
    cur[0] = 1
    prod = np.zeros(2 * n - 1, dtype=np.int64)
    for k in range(q - 1):
        code = 0
        mul = 1
        for i in range(n):
            code += cur[i] * mul
            mul *= p
        out[k] = code
        prod[:] = 0
        for i in range(n):
            if cur[i] != 0:
                for j in range(n):
                    prod[i + j] += cur[i] * gcoef[j]
        for i in range(2 * n - 2, n - 1, -1):
            c = prod[i] % p
            if c != 0:
                for j in range(n + 1):
                    prod[i - n + j] -= c * modulus[j]
        for i in range(n):
            cur[i] = prod[i] % p
    return out


@dataclass(frozen=True, eq=False)
class FieldContext:
    """Immutable finite field with generator and exp/log tables."""

    p: int
    n: int
    modulus_poly: tuple[int, ...] | None
    generator: int
    exp_table: np.ndarray = field(repr=False)
    log_table: np.ndarray = field(repr=False)
    trace_table: np.ndarray = field(repr=False)

    @property
    def q(self) -> int:
        return self.p**self.n

    # --- encoding --------------------------------------------------------
    def digits(self, x) -> np.ndarray:
        """Coefficient vectors, shape (..., n)."""
        x = np.asarray(x, dtype=np.int64)
        pw = self.p ** np.arange(self.n, dtype=np.int64)
        return (x[..., None] // pw) % self.p

    def from_digits(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.int64) % self.p
        pw = self.p ** np.arange(self.n, dtype=np.int64)
        return c @ pw

    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)

    # --- arithmetic (vectorized over integer arrays) -----------------------
    def add(self, x, y):
        if self.n == 1:
            return (np.asarray(x, dtype=np.int64) + y) % self.p
        return self.from_digits(self.digits(x) + self.digits(y))

    def neg(self, x):
        if self.n == 1:
            return (-np.asarray(x, dtype=np.int64)) % self.p
        return self.from_digits(-self.digits(x))

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def mul(self, x, y):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self.n == 1:
            return (x * y) % self.p
        x, y = np.broadcast_arrays(x, y)
        out = np.zeros(x.shape, dtype=np.int64)
        nz = (x != 0) & (y != 0)
        k = (self.log_table[x[nz]] + self.log_table[y[nz]]) % (self.q - 1)
        out[nz] = self.exp_table[k]
        return out

    def inv(self, x):
        x = np.asarray(x, dtype=np.int64)
        if np.any(x == 0):
            raise ZeroDivisionError("0 has no inverse")
        return self.exp_table[(-self.log_table[x]) % (self.q - 1)]

    def power(self, x, e: int):
        x = np.asarray(x, dtype=np.int64)
        out = np.where(x == 0, 0 if e > 0 else 1, 0).astype(np.int64)
        nz = x != 0
        out[nz] = self.exp_table[(self.log_table[x[nz]] * (e % (self.q - 1))) % (self.q - 1)]
        return out

    def exp(self, k):
        return self.exp_table[np.asarray(k, dtype=np.int64) % (self.q - 1)]

    def dlog(self, x):
        x = np.asarray(x, dtype=np.int64)
        if np.any(x == 0):
            raise ValueOutOfRange("discrete log of 0 is undefined")
        return self.log_table[x]

    def embed_int(self, c: int) -> int:
        """Image of an integer under Z -> F_p -> F_q."""
        return int(c) % self.p

    # --- characters -------------------------------------------------------
    def trace(self, x):
        return self.trace_table[np.asarray(x, dtype=np.int64)]

    def psi(self, x):
        """Additive character e(Tr(x)/p)."""
        return np.exp(2j * np.pi * self.trace(x) / self.p)

    def chi(self, j: int, x):
        """Multiplicative character chi_j(g^k) = e(jk/(q-1)); undefined at 0."""
        k = self.dlog(x)
        return np.exp(2j * np.pi * ((int(j) * k) % (self.q - 1)) / (self.q - 1))


def _element_order_ok(cand: list[int], q: int, primes, p: int, modulus) -> bool:
    for ell in primes:
        e = (q - 1) // ell
        if modulus is None:
            if pow(cand[0], e, p) == 1:
                return False
        elif _ppowmod(cand, e, list(modulus), p) == [1]:
            return False
    return True


def build_field(p: int, n: int = 1, cap: int = DEFAULT_TABLE_CAP) -> FieldContext:
    """Construct F_{p^n} with the smallest generator in code order."""
    p, n = int(p), int(n)
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if n < 1:
        raise ValueOutOfRange("extension degree must be >= 1")
    q = p**n
    if q > cap:
        raise FieldTooLarge(f"q = {q} exceeds the table cap {cap}")
    primes = sorted(factorize(q - 1)) if q > 2 else []
    modulus = None if n == 1 else first_irreducible(p, n)
    gen = None
    for code in range(1, q):
        coeffs = [(code // p**i) % p for i in range(n)]
        if _element_order_ok(_ptrim(coeffs) or [0], q, primes, p, modulus):
            gen = code
            break
    if gen is None:
        raise NoIrreducibleFound("no generator found")
    if n == 1:
        exp_table = np.empty(q - 1, dtype=np.int64)
        x = 1
        for k in range(q - 1):
            exp_table[k] = x
            x = x * gen % p
        trace_table = np.arange(q, dtype=np.int64)
    else:
        gcoef = np.array([(gen // p**i) % p for i in range(n)], dtype=np.int64)
        exp_table = _ext_exp_table(p, n, np.array(modulus, dtype=np.int64), gcoef, q)
        # trace of the basis monomials t^i, then extend linearly
        basis_tr = np.empty(n, dtype=np.int64)
        for i in range(n):
            ti = [0] * i + [1]
            acc: list[int] = []
            y = _pmod(ti, list(modulus), p)
            for _ in range(n):
                acc = _psub(acc, [(-c) % p for c in y], p)
                y = _ppowmod(y, p, list(modulus), p)
            if len(acc) > 1:
                raise NoIrreducibleFound("trace left F_p; modulus is not irreducible")
            basis_tr[i] = acc[0] if acc else 0
        pw = p ** np.arange(n, dtype=np.int64)
        dig = (np.arange(q, dtype=np.int64)[:, None] // pw) % p
        trace_table = (dig @ basis_tr) % p
    log_table = np.full(q, -1, dtype=np.int64)
    log_table[exp_table] = np.arange(q - 1, dtype=np.int64)
    if q > 1 and np.count_nonzero(log_table[1:] >= 0) != q - 1:
        raise NoIrreducibleFound("generator does not span the multiplicative group")
    for arr in (exp_table, log_table, trace_table):
        arr.setflags(write=False)
    return FieldContext(p, n, modulus, gen, exp_table, log_table, trace_table)


def _check_divides(ctx: FieldContext, d: int) -> None:
    if d < 1 or (ctx.q - 1) % d != 0:
        raise OrderDoesNotDivide(f"{d} does not divide q - 1 = {ctx.q - 1}")


def primitive_root_of_unity(ctx: FieldContext, d: int) -> int:
    """zeta = g^((q-1)/d), the fixed primitive d-th root of unity."""
    _check_divides(ctx, d)
    return int(ctx.exp_table[(ctx.q - 1) // d % (ctx.q - 1)]) if ctx.q > 2 else 1


def cyclotomic_residues(ctx: FieldContext, d: int) -> tuple[int, ...]:
    """(zeta^1, zeta^2, ..., zeta^d) with zeta = g^((q-1)/d); the last entry is 1."""
    _check_divides(ctx, d)
    step = (ctx.q - 1) // d
    return tuple(int(ctx.exp_table[(k * step) % (ctx.q - 1)]) for k in range(1, d + 1))


def roots_of_unity(ctx: FieldContext, d: int) -> tuple[int, ...]:
    """The subgroup mu_d of F_q^x, ascending by element code."""
    return tuple(sorted(cyclotomic_residues(ctx, d)))


def find_subgroup_prime_order(ctx: FieldContext, d: int) -> tuple[int, ...]:
    if not is_prime(d):
        raise NotPrime(f"subgroup order {d} is not prime")
    return roots_of_unity(ctx, d)


@dataclass(frozen=True)
class PolyRoots:
    roots: tuple[int, ...]
    multiplicities: tuple[int, ...]
    distinct: bool

    @property
    def count_with_multiplicity(self) -> int:
        return sum(self.multiplicities)


def _poly_eval(ctx: FieldContext, coeffs: Sequence[int], x: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(x)
    for c in reversed(coeffs):
        acc = ctx.add(ctx.mul(acc, x), ctx.embed_int(c))
    return acc


def _synthetic_div(ctx: FieldContext, coeffs: list[int], r: int) -> tuple[list[int], int]:
    """Divide by (X - r) over F_q; coefficients are element codes, ascending."""
    n = len(coeffs) - 1
    quot = [0] * n
    acc = 0
    for i in range(n, -1, -1):
        acc = int(ctx.add(ctx.mul(acc, r), coeffs[i]))
        if i > 0:
            quot[i - 1] = acc
    return quot, acc


def poly_roots_mod(
    ctx: FieldContext, g: Sequence[int], require_split: bool = False
) -> PolyRoots:
    """Roots in F_q of an integer polynomial g (coefficients ascending, monic).

    Roots are found by an exhaustive scan. ``distinct`` is True when every root
    is simple, which is the split-prime condition on the residues.
    """
    g = [int(c) for c in g]
    while len(g) > 1 and g[-1] == 0:
        g.pop()
    deg = len(g) - 1
    if deg < 1 or g[-1] != 1:
        raise ValueOutOfRange("g must be monic of degree >= 1")
    xs = ctx.elements()
    vals = _poly_eval(ctx, g, xs)
    roots = tuple(int(r) for r in xs[vals == 0])
    mults = []
    for r in roots:
        coeffs = [ctx.embed_int(c) for c in g]
        m = 0
        while len(coeffs) > 1:
            quot, rem = _synthetic_div(ctx, coeffs, r)
            if rem != 0:
                break
            coeffs = quot
            m += 1
        mults.append(m)
    res = PolyRoots(roots, tuple(mults), all(m == 1 for m in mults))
    if require_split and res.count_with_multiplicity != deg:
        raise NotTotallySplit(
            f"g has {res.count_with_multiplicity} roots with multiplicity in F_{ctx.q}, degree {deg}"
        )
    return res
