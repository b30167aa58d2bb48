"""Empirical and reference probability measures."""

from __future__ import annotations

import json
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path

import numpy as np
from scipy import special

from . import rng
from .errors import MassMismatch, ValueOutOfRange
from .expsums import SumFamily
from .zlattice import TorusSubgroupSampler, cyclotomic_preset, build_sampler

WEIGHT_TOL = 1e-12
REAL_TOL = 1e-9


def _normalize_weights(weights, n: int) -> np.ndarray:
    if weights is None:
        return np.full(n, 1.0 / n) if n else np.zeros(0)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,) or np.any(w <= 0):
        raise ValueOutOfRange("weights must be positive with one per atom")
    s = w.sum()
    if abs(s - 1.0) > WEIGHT_TOL:
        w = w / s
    return w


def _merge_sorted(x: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = np.r_[True, x[1:] != x[:-1]] if len(x) else np.zeros(0, bool)
    idx = np.cumsum(keep) - 1
    return x[keep], np.bincount(idx, weights=w, minlength=int(keep.sum()))


@dataclass(frozen=True, eq=False)
class Empirical1D:
    atoms: np.ndarray
    weights: np.ndarray
    source: str = ""
    uniform: bool = True

    @classmethod
    def from_values(cls, values, weights=None, source: str = "") -> "Empirical1D":
        x = np.asarray(values, dtype=np.float64).ravel()
        w = _normalize_weights(weights, len(x))
        order = np.argsort(x, kind="stable")
        return cls(x[order], w[order], source, weights is None)

    def merged(self) -> "Empirical1D":
        x, w = _merge_sorted(self.atoms, self.weights)
        return Empirical1D(x, w, self.source, len(x) == len(self.atoms) and self.uniform)

    def cdf(self, x):
        cw = np.r_[0.0, np.cumsum(self.weights)]
        return cw[np.searchsorted(self.atoms, x, side="right")]

    def quantile(self, t):
        cw = np.cumsum(self.weights)
        i = np.searchsorted(cw, np.asarray(t) - 1e-15, side="left")
        return self.atoms[np.minimum(i, len(self.atoms) - 1)]

    def mean(self) -> float:
        return float(self.atoms @ self.weights)


@dataclass(frozen=True, eq=False)
class EmpiricalCircle:
    """Measure on R/Z with the arc-length metric min(|x-y|, 1-|x-y|)."""

    atoms: np.ndarray
    weights: np.ndarray
    source: str = ""
    uniform: bool = True

    @classmethod
    def from_values(cls, values, weights=None, source: str = "") -> "EmpiricalCircle":
        x = np.mod(np.asarray(values, dtype=np.float64).ravel(), 1.0)
        w = _normalize_weights(weights, len(x))
        order = np.argsort(x, kind="stable")
        return cls(x[order], w[order], source, weights is None)

    def cdf(self, x):
        cw = np.r_[0.0, np.cumsum(self.weights)]
        return cw[np.searchsorted(self.atoms, x, side="right")]

    def as_torus(self) -> "EmpiricalTorus":
        return EmpiricalTorus(self.atoms[:, None], self.weights, self.source, self.uniform)


@dataclass(frozen=True, eq=False)
class EmpiricalTorus:
    """Measure on (R/Z)^k with the metric (sum_j l(x_j, y_j)^2)^(1/2)."""

    points: np.ndarray
    weights: np.ndarray
    source: str = ""
    uniform: bool = True

    @classmethod
    def from_points(cls, points, weights=None, source: str = "") -> "EmpiricalTorus":
        P = np.mod(np.atleast_2d(np.asarray(points, dtype=np.float64)), 1.0)
        return cls(P, _normalize_weights(weights, len(P)), source, weights is None)

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def fourier(self, H: np.ndarray) -> np.ndarray:
        """hat mu(h) = sum_i w_i e(h . x_i) for the rows h of H."""
        H = np.atleast_2d(H)
        out = np.empty(len(H), dtype=np.complex128)
        step = max(1, 2_000_000 // max(1, len(self.points)))
        for s in range(0, len(H), step):
            ph = self.points @ H[s : s + step].T
            out[s : s + step] = self.weights @ np.exp(2j * np.pi * ph)
        return out


@dataclass(frozen=True, eq=False)
class Empirical2D:
    """Measure on the complex plane with the Euclidean metric."""

    points: np.ndarray
    weights: np.ndarray
    source: str = ""
    uniform: bool = True

    @classmethod
    def from_values(cls, values, weights=None, source: str = "") -> "Empirical2D":
        z = np.asarray(values, dtype=np.complex128).ravel()
        return cls(z, _normalize_weights(weights, len(z)), source, weights is None)

    def merged(self, decimals: int | None = None) -> "Empirical2D":
        """Combine equal atoms; ``decimals`` rounds before comparing."""
        z = self.points
        key = np.round(z, decimals) if decimals is not None else z
        _, first, inv = np.unique(
            np.stack([key.real, key.imag], axis=1), axis=0, return_index=True, return_inverse=True
        )
        w = np.bincount(inv.ravel(), weights=self.weights, minlength=len(first))
        return Empirical2D(z[first], w, self.source, len(first) == len(z) and self.uniform)

    @property
    def xy(self) -> np.ndarray:
        return np.stack([self.points.real, self.points.imag], axis=1)


def _check_mass(w: np.ndarray) -> None:
    if abs(w.sum() - 1.0) > WEIGHT_TOL * max(1, len(w)):
        raise MassMismatch(f"weights sum to {w.sum():.17g}")


# --- reference measures ---------------------------------------------------


def sato_tate_cdf(x):
    """F(x) = 1/2 + x sqrt(4 - x^2)/(4 pi) + arcsin(x/2)/pi, clamped to [0, 1]."""
    x = np.clip(np.asarray(x, dtype=np.float64), -2.0, 2.0)
    f = 0.5 + x * np.sqrt(4.0 - x * x) / (4 * np.pi) + np.arcsin(x / 2) / np.pi
    return np.clip(f, 0.0, 1.0)


def sato_tate_density(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(np.abs(x) < 2, np.sqrt(np.clip(1 - x * x / 4, 0, None)) / np.pi, 0.0)


class _Reference:
    name = ""
    kind = "1d"
    support: tuple[float, float] | None = None

    def describe(self) -> dict:
        return {"type": self.name}


class SatoTate(_Reference):
    name = "sato_tate"
    support = (-2.0, 2.0)

    cdf = staticmethod(sato_tate_cdf)
    density = staticmethod(sato_tate_density)

    @staticmethod
    def quantile(t):
        t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
        # F(2 cos theta) = 1 - (theta - sin(theta) cos(theta)) / pi, monotone in theta
        lo = np.zeros_like(t)
        hi = np.full_like(t, np.pi)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            val = 1 - (mid - np.sin(mid) * np.cos(mid)) / np.pi
            big = val > t
            lo = np.where(big, mid, lo)
            hi = np.where(big, hi, mid)
        return 2 * np.cos(0.5 * (lo + hi))

    def sample(self, M: int, seed: int = 0) -> Empirical1D:
        # trace of a Haar SU(2) element: 2 cos(theta) with density (2/pi) sin^2 theta
        u = rng.draw(seed, 11, M, lambda g, n: g.random(n))
        return Empirical1D.from_values(self.quantile(u), source="sato_tate")


class ArcSine2cos(_Reference):
    """Law of 2 cos(2 pi u), u uniform."""

    name = "arcsine"
    support = (-2.0, 2.0)

    @staticmethod
    def cdf(x):
        x = np.clip(np.asarray(x, dtype=np.float64), -2.0, 2.0)
        return 1.0 - np.arccos(x / 2) / np.pi

    @staticmethod
    def density(x):
        x = np.asarray(x, dtype=np.float64)
        inside = np.abs(x) < 2
        return np.where(inside, 1.0 / (np.pi * np.sqrt(np.where(inside, 4 - x * x, 1.0))), 0.0)

    @staticmethod
    def quantile(t):
        return 2 * np.cos(np.pi * (1 - np.clip(np.asarray(t, dtype=np.float64), 0, 1)))

    def sample(self, M: int, seed: int = 0) -> Empirical1D:
        u = rng.draw(seed, 12, M, lambda g, n: g.random(n))
        return Empirical1D.from_values(2 * np.cos(2 * np.pi * u), source="arcsine")


class ComplexGaussianHalfId(_Reference):
    """Standard complex Gaussian: real and imaginary parts N(0, 1/2), independent."""

    name = "gaussian_half_id"
    kind = "2d"
    TAIL_MASS = 1e-14

    @staticmethod
    def cdf(x):
        """CDF of one real coordinate."""
        return special.ndtr(np.asarray(x, dtype=np.float64) * np.sqrt(2.0))

    @staticmethod
    def density(x):
        x = np.asarray(x, dtype=np.float64)
        return np.exp(-x * x) / np.sqrt(np.pi)

    @staticmethod
    def quantile(t):
        return special.ndtri(np.asarray(t, dtype=np.float64)) / np.sqrt(2.0)

    @property
    def support(self):
        a = float(-special.ndtri(self.TAIL_MASS / 2) / np.sqrt(2.0))
        return (-a, a)

    def sample(self, M: int, seed: int = 0) -> Empirical2D:
        z = rng.draw(seed, 13, M, lambda g, n: g.standard_normal((n, 2)) / np.sqrt(2.0))
        return Empirical2D.from_values(z[:, 0] + 1j * z[:, 1], source="gaussian_half_id")


class HaarPushforward(_Reference):
    """Image of Haar measure on H_Z under sigma(t) = scale * sum_j e(t_j)."""

    name = "haar_pushforward"
    kind = "2d"

    def __init__(self, sampler: TorusSubgroupSampler, scale: float = 1.0):
        self.sampler = sampler
        self.scale = float(scale)

    @classmethod
    def cyclotomic(cls, d: int, scale: float = 1.0) -> "HaarPushforward":
        return cls(build_sampler(cyclotomic_preset(d), 0), scale)

    def describe(self) -> dict:
        return {"type": self.name, "z_size": self.sampler.z_size, "scale": self.scale}

    def sample(self, M: int, seed: int = 0) -> Empirical2D:
        t = rng.draw(seed, 14, M, self.sampler._block)
        z = self.scale * np.exp(2j * np.pi * t).sum(axis=1)
        return Empirical2D.from_values(z, source="haar_pushforward")


class GammaD(_Reference):
    """(z_1 + ... + z_{d-1} + 1/(z_1 ... z_{d-1})) / sqrt(d), z_i uniform on S^1."""

    name = "gamma_d"
    kind = "2d"

    def __init__(self, d: int):
        if d < 2:
            raise ValueOutOfRange("d must be >= 2")
        self.d = int(d)

    def describe(self) -> dict:
        return {"type": self.name, "d": self.d}

    def sample(self, M: int, seed: int = 0) -> Empirical2D:
        return gamma_d_sampler(self.d, seed, M)


class LebesgueCircle(_Reference):
    name = "lebesgue_circle"
    kind = "circle"
    support = (0.0, 1.0)

    @staticmethod
    def cdf(x):
        return np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)

    def sample(self, M: int, seed: int = 0) -> EmpiricalCircle:
        return EmpiricalCircle.from_values(rng.draw(seed, 15, M, lambda g, n: g.random(n)))


class LebesgueTorus(_Reference):
    name = "lebesgue_torus"
    kind = "torus"

    def __init__(self, k: int):
        self.k = int(k)

    def describe(self) -> dict:
        return {"type": self.name, "k": self.k}

    def fourier(self, H: np.ndarray) -> np.ndarray:
        H = np.atleast_2d(H)
        return np.all(H == 0, axis=1).astype(np.complex128)

    def sample(self, M: int, seed: int = 0) -> EmpiricalTorus:
        return EmpiricalTorus.from_points(rng.draw(seed, 16, M, lambda g, n: g.random((n, self.k))))


def gamma_d_sampler(d: int, seed: int, M: int) -> Empirical2D:
    if d < 2:
        raise ValueOutOfRange("d must be >= 2")

    def block(g, n):
        u = g.random((n, d - 1))
        z = np.exp(2j * np.pi * u)
        last = np.exp(-2j * np.pi * u.sum(axis=1))
        return (z.sum(axis=1) + last) / np.sqrt(d)

    return Empirical2D.from_values(rng.draw(seed, 17, M, block), source=f"gamma_{d}")


def default_exclude_zero(family: SumFamily) -> bool:
    """Kloosterman families drop a = 0; additive families keep it."""
    return family.kind == "kloosterman"


def empirical_from_family(
    family: SumFamily,
    exclude_zero_index: bool | None = None,
    scale: float = 1.0,
    real_tol: float = REAL_TOL,
):
    """Uniform empirical measure on the family values (times ``scale``)."""
    if exclude_zero_index is None:
        exclude_zero_index = default_exclude_zero(family)
    vals = family.values
    if exclude_zero_index:
        vals = vals[family.index != 0]
    vals = vals * scale
    src = f"{family.kind}:q={family.q}"
    if np.all(np.abs(vals.imag) <= real_tol):
        return Empirical1D.from_values(vals.real, source=src)
    return Empirical2D.from_values(vals, source=src)


def circle_grid(N: int) -> EmpiricalCircle:
    if N < 1:
        raise ValueOutOfRange("N must be >= 1")
    return EmpiricalCircle(np.arange(N) / N, np.full(N, 1.0 / N), f"circle_grid:{N}", True)


def orbit_measure(orbit) -> EmpiricalTorus:
    """Uniform measure on the points of a torus orbit."""
    return EmpiricalTorus(orbit.points, np.full(orbit.q, 1.0 / orbit.q), f"orbit:q={orbit.q}", True)


def make_reference(spec: dict) -> _Reference:
    """Reference measure from a JSON-style description."""
    kind = spec.get("type")
    if kind == "sato_tate":
        return SatoTate()
    if kind == "arcsine":
        return ArcSine2cos()
    if kind == "gaussian_half_id":
        return ComplexGaussianHalfId()
    if kind == "gamma_d":
        return GammaD(int(spec["d"]))
    if kind == "haar_pushforward":
        return HaarPushforward.cyclotomic(int(spec["d"]), float(spec.get("scale", 1.0)))
    if kind == "lebesgue_circle":
        return LebesgueCircle()
    if kind == "lebesgue_torus":
        return LebesgueTorus(int(spec["k"]))
    raise ValueOutOfRange(f"unknown reference measure {kind!r}")


# --- serialization ----------------------------------------------------------

METRICS = {
    Empirical1D: "line",
    EmpiricalCircle: "circle",
    EmpiricalTorus: "torus",
    Empirical2D: "euclidean_plane",
}


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_measure(measure, path) -> None:
    """CSV ``index,re,im`` (plus ``weight`` if non-uniform) and a JSON sidecar."""
    path = Path(path)
    if isinstance(measure, Empirical2D):
        re, im = measure.points.real, measure.points.imag
    elif isinstance(measure, EmpiricalTorus):
        raise ValueOutOfRange("torus measures have no CSV form; use JSON")
    else:
        re, im = measure.atoms, np.zeros_like(measure.atoms)
    uniform = bool(np.all(measure.weights == measure.weights[0])) if len(measure.weights) else True
    lines = ["index,re,im" + ("" if uniform else ",weight")]
    for i in range(len(re)):
        row = f"{i},{fmt(re[i])},{fmt(im[i])}"
        if not uniform:
            row += f",{fmt(measure.weights[i])}"
        lines.append(row)
    path.write_text("\n".join(lines) + "\n", newline="\n")
    side = {"type": type(measure).__name__, "metric": METRICS[type(measure)],
            "weights_uniform": uniform, "source": measure.source}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, sort_keys=True) + "\n")


def read_measure(path):
    path = Path(path)
    side = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    w = None if side["weights_uniform"] else data[:, 3]
    if side["type"] == "Empirical2D":
        return Empirical2D.from_values(data[:, 1] + 1j * data[:, 2], w, side["source"])
    if side["type"] == "EmpiricalCircle":
        return EmpiricalCircle.from_values(data[:, 1], w, side["source"])
    return Empirical1D.from_values(data[:, 1], w, side["source"])
