"""Integer linear algebra and Haar sampling on the torus subgroup H_Z.

H_Z is the set of t in (R/Z)^k with alpha . t = 0 mod 1 for every relation
alpha. With a Smith form D = U A V of the relation matrix A, the substitution
t = V s turns the constraints into d_i s_i = 0 mod 1, so s_i ranges over
multiples of 1/d_i for the nonzero invariant factors and over all of R/Z for
the remaining coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng
from .errors import ConfigError, SNFOverflow, ValueOutOfRange
from .ff import is_prime

PROVENANCES = ("PresetPrimeCyclotomic", "PresetPrimePowerCyclotomic", "UserSupplied")
MAX_ENTRY_BITS = 4096


def as_int_matrix(A) -> np.ndarray:
    """Object array of Python ints, shape (rows, cols)."""
    rows = [[int(x) for x in row] for row in A]
    if rows and len({len(r) for r in rows}) != 1:
        raise ValueOutOfRange("matrix rows have different lengths")
    out = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, r in enumerate(rows):
        for j, x in enumerate(r):
            out[i, j] = x
    return out


def identity(k: int) -> np.ndarray:
    return as_int_matrix([[int(i == j) for j in range(k)] for i in range(k)])


def int_det(M: np.ndarray) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    A = [[int(x) for x in row] for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


@dataclass(frozen=True, eq=False)
class SNFDecomposition:
    U: np.ndarray
    D: np.ndarray
    V: np.ndarray

    @property
    def diagonal(self) -> tuple[int, ...]:
        k = min(self.D.shape)
        return tuple(int(self.D[i, i]) for i in range(k))

    @property
    def rank(self) -> int:
        return sum(1 for x in self.diagonal if x != 0)


def smith_normal_form(A) -> SNFDecomposition:
    """Smith form D = U A V with smallest-|entry| pivoting, ties to lowest (row, col)."""
    M = [[int(x) for x in row] for row in as_int_matrix(A)]
    m = len(M)
    n = len(M[0]) if m else 0
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        M[i], M[j] = M[j], M[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in M:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, c):  # row_dst += c * row_src
        M[dst] = [a + c * b for a, b in zip(M[dst], M[src])]
        U[dst] = [a + c * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, c):
        for row in M:
            row[dst] += c * row[src]
        for row in V:
            row[dst] += c * row[src]

    t = 0
    while t < min(m, n):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    x = M[i][j]
                    if x != 0 and (best is None or abs(x) < best[0]):
                        best = (abs(x), i, j)
            if best is None:
                break
            _, i, j = best
            swap_rows(t, i)
            swap_cols(t, j)
            piv = M[t][t]
            dirty = False
            for i in range(t + 1, m):
                if M[i][t]:
                    add_row(i, t, -(M[i][t] // piv))
                    dirty = dirty or M[i][t] != 0
            for j in range(t + 1, n):
                if M[t][j]:
                    add_col(j, t, -(M[t][j] // piv))
                    dirty = dirty or M[t][j] != 0
            if dirty:
                continue
            bad = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if M[i][j] % piv),
                None,
            )
            if bad is None:
                break
            add_row(t, bad, 1)
        if best is None:
            break
        if M[t][t] < 0:
            M[t] = [-x for x in M[t]]
            U[t] = [-x for x in U[t]]
        if max((abs(x).bit_length() for row in M for x in row), default=0) > MAX_ENTRY_BITS:
            raise SNFOverflow("entry growth exceeded the configured bit limit")
        t += 1
    return SNFDecomposition(as_int_matrix(U) if m else np.empty((0, 0), dtype=object),
                            as_int_matrix(M) if m else np.empty((0, n), dtype=object),
                            as_int_matrix(V) if n else np.empty((0, 0), dtype=object))


@dataclass(frozen=True, eq=False)
class RelationModule:
    z_size: int
    generators: np.ndarray = dc_field(repr=False)
    provenance: str = "UserSupplied"

    def __post_init__(self):
        g = self.generators
        if self.provenance not in PROVENANCES:
            raise ConfigError(f"unknown provenance {self.provenance!r}")
        if g.size and g.shape[1] != self.z_size:
            raise ValueOutOfRange("generator length differs from z_size")
        for row in g:
            if all(int(x) == 0 for x in row):
                raise ValueOutOfRange("zero generator row")

    def to_json(self) -> str:
        return json.dumps(
            {
                "generators": [[int(x) for x in row] for row in self.generators],
                "provenance": self.provenance,
                "z_size": self.z_size,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "RelationModule":
        data = json.loads(text)
        extra = set(data) - {"z_size", "generators", "provenance"}
        if extra:
            raise ConfigError(f"unknown fields {sorted(extra)}")
        k = int(data["z_size"])
        gens = data.get("generators", [])
        mat = as_int_matrix(gens) if gens else np.empty((0, k), dtype=object)
        return cls(k, mat, data.get("provenance", "UserSupplied"))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "RelationModule":
        return cls.from_json(Path(path).read_text())


def relation_preset_prime(d: int) -> RelationModule:
    """mu_d for prime d: the single relation 1 + zeta + ... + zeta^(d-1) = 0."""
    if not is_prime(d):
        raise ValueOutOfRange(f"{d} is not prime")
    return RelationModule(d, as_int_matrix([[1] * d]), "PresetPrimeCyclotomic")


def relation_preset_prime_power(r: int, b: int) -> RelationModule:
    """mu_{r^b} in the order zeta^1..zeta^d: generator m sums positions m + l r^(b-1)."""
    if not is_prime(r) or b < 1:
        raise ValueOutOfRange("need r prime and b >= 1")
    d, s = r**b, r ** (b - 1)
    rows = []
    for m in range(1, s + 1):
        row = [0] * d
        for ell in range(r):
            row[m + ell * s - 1] = 1
        rows.append(row)
    prov = "PresetPrimePowerCyclotomic" if b > 1 else "PresetPrimeCyclotomic"
    return RelationModule(d, as_int_matrix(rows), prov)


def cyclotomic_preset(d: int) -> RelationModule:
    """Preset for mu_d when d is a prime power."""
    from .ff import factorize

    f = factorize(d)
    if len(f) != 1:
        raise ValueOutOfRange(f"{d} is not a prime power; no preset relation module")
    (r, b), = f.items()
    return relation_preset_prime(d) if b == 1 else relation_preset_prime_power(r, b)


@dataclass(frozen=True, eq=False)
class TorusSubgroupSampler:
    """Haar sampler on H_Z; point t = V s mod 1."""

    z_size: int
    V: np.ndarray = dc_field(repr=False)
    torsion_divisors: tuple[int, ...]
    free_rank: int
    seed: int
    relations: np.ndarray = dc_field(repr=False)

    def _block(self, gen: np.random.Generator, size: int) -> np.ndarray:
        k = self.z_size
        r = len(self.torsion_divisors)
        tors = [i for i in range(r) if self.torsion_divisors[i] > 1]
        t = np.zeros((size, k))
        if tors:
            # torsion part exactly, as integer numerators over L
            L = math.lcm(*(self.torsion_divisors[i] for i in tors))
            ks = np.stack([gen.integers(0, self.torsion_divisors[i], size) for i in tors], axis=1)
            weights = np.array(
                [[int(self.V[j, i]) * (L // self.torsion_divisors[i]) % L for i in tors] for j in range(k)],
                dtype=object,
            )
            num = (ks.astype(object) @ weights.T) % L
            t = np.asarray(num, dtype=np.float64) / L
        if self.free_rank:
            u = gen.random((size, self.free_rank))
            Vf = np.asarray(self.V[:, r:], dtype=np.float64)
            t = t + u @ Vf.T
        return np.mod(t, 1.0)

    def sample(self, M: int, start: int = 0, stream: int = 0) -> np.ndarray:
        """Rows start..start+M-1 of the sampler's stream, shape (M, z_size)."""
        return rng.draw(self.seed, stream, M, self._block, start=start)

    def character_defect(self, t: np.ndarray) -> float:
        """max over generators and samples of dist(alpha . t, Z)."""
        if self.relations.size == 0:
            return 0.0
        A = np.asarray(self.relations, dtype=np.float64)
        x = t @ A.T
        return float(np.max(np.abs(x - np.round(x)), initial=0.0))


def build_sampler(R: RelationModule, seed: int = 0) -> TorusSubgroupSampler:
    k = R.z_size
    if k < 1:
        raise ValueOutOfRange("z_size must be >= 1")
    if R.generators.size == 0:
        V = identity(k)
        divs: tuple[int, ...] = ()
    else:
        snf = smith_normal_form(R.generators)
        V = snf.V
        divs = tuple(x for x in snf.diagonal if x != 0)
    return TorusSubgroupSampler(k, V, divs, k - len(divs), int(seed), R.generators)


def sigma_pushforward_sample(
    sampler: TorusSubgroupSampler, M: int, start: int = 0, stream: int = 0
) -> np.ndarray:
    """sum_j e(t_j) for M Haar samples t."""
    t = sampler.sample(M, start=start, stream=stream)
    return np.exp(2j * np.pi * t).sum(axis=1)


def minors_gcd(A, k: int) -> int:
    """gcd of all k x k minors (test oracle)."""
    from itertools import combinations

    M = as_int_matrix(A)
    g = 0
    for rows in combinations(range(M.shape[0]), k):
        for cols in combinations(range(M.shape[1]), k):
            g = math.gcd(g, int_det(M[np.ix_(rows, cols)]))
    return g


def relation_lattice_contains(R: RelationModule, H) -> np.ndarray:
    """Whether each row of H lies in the Z-span of the relations.

    With D = U A V, alpha is in the row lattice of A exactly when
    (alpha V)_i is divisible by d_i for i < rank and vanishes beyond it.
    """
    H = np.atleast_2d(np.asarray(H, dtype=np.int64))
    if R.generators.size == 0:
        return np.all(H == 0, axis=1)
    snf = smith_normal_form(R.generators)
    V = np.array(snf.V.tolist(), dtype=np.int64)
    W = H @ V
    ok = np.ones(len(H), dtype=bool)
    for i, d in enumerate(snf.diagonal):
        if d != 0:
            ok &= W[:, i] % d == 0
        else:
            ok &= W[:, i] == 0
    ok &= np.all(W[:, len(snf.diagonal):] == 0, axis=1)
    return ok


class HaarTorusFourier:
    """Fourier coefficients of Haar measure on H_Z: 1 on R_Z, 0 elsewhere."""

    def __init__(self, R: RelationModule):
        self.R = R
        self.k = R.z_size

    def fourier(self, H) -> np.ndarray:
        return relation_lattice_contains(self.R, H).astype(np.complex128)
