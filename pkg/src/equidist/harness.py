"""Experiment orchestration: size sweeps, rate fits, CLT pairs, target counts, emission."""

from __future__ import annotations

import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import rng
from .errors import ConfigError, EquidistError, MathGuardError, SweepAborted
from .expsums import (
    SumFamily,
    gaussian_period_family,
    kloosterman_family,
    mellin_family,
    rootset_family,
    subgroup_family_normalized,
    torus_orbit,
)
from .ff import build_field, cyclotomic_residues, factorize, is_prime, primes_in_range
from .measures import (
    Empirical1D,
    Empirical2D,
    EmpiricalTorus,
    LebesgueCircle,
    circle_grid,
    empirical_from_family,
    fmt,
    make_reference,
)
from .wasserstein import (
    fourier_bound_torus,
    rate_bound_constant,
    subgroup_rate_bound,
    w1_circle,
    w1_line,
    w1_planar,
)
from .wasserstein.result import dumps
from .zlattice import HaarTorusFourier, cyclotomic_preset

SCHEMA_VERSION = 1
FAMILY_KINDS = ("gaussian_period", "subgroup_normalized", "rootset", "kloosterman", "mellin", "circle_grid")
METHODS = ("line", "circle", "exact2d", "sinkhorn", "fourier")


class InsufficientData(MathGuardError):
    pass


@dataclass
class ExperimentConfig:
    """Sweep description, loaded from JSON. Unknown fields are rejected."""

    family: dict
    reference: dict
    method: str
    primes: dict | None = None
    sizes: list | None = None
    reference_samples: int | None = None
    sample_factor: float = 10.0
    bootstrap: int = 5
    merge_atoms: bool = True
    exclude_zero: bool | None = None
    bound: dict | None = None
    check: dict | None = None
    fourier_T: int = 16
    seed: int = 0
    threads: int = 1
    output: str | None = None
    max_seconds_per_size: float | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - names
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        kind = self.family.get("kind")
        if kind not in FAMILY_KINDS:
            raise ConfigError(f"family.kind must be one of {FAMILY_KINDS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.bootstrap < 1:
            raise ConfigError("bootstrap must be >= 1")
        if kind == "circle_grid":
            if not self.sizes:
                raise ConfigError("circle_grid sweeps need a 'sizes' list")
        elif self.primes is None:
            raise ConfigError("prime sweeps need a 'primes' block")
        for name, keys in (("check", {"slope_max", "bound", "allowance_factor"}),
                           ("bound", {"constant", "exponent"})):
            block = getattr(self, name)
            if block is None:
                continue
            if not isinstance(block, dict):
                raise ConfigError(f"'{name}' must be an object")
            extra = set(block) - keys
            if extra:
                raise ConfigError(f"unknown {name} fields: {sorted(extra)}")
        if self.primes is not None:
            allowed = {"min", "max", "modulus", "residue", "count", "list"}
            extra = set(self.primes) - allowed
            if extra:
                raise ConfigError(f"unknown primes fields: {sorted(extra)}")
            d = self.family.get("d")
            if kind in ("gaussian_period", "subgroup_normalized"):
                if d is None:
                    raise ConfigError(f"{kind} needs 'd'")
                mod = int(self.primes.get("modulus", 1))
                res = int(self.primes.get("residue", 0))
                explicit = self.primes.get("list")
                if explicit is not None:
                    bad = [p for p in explicit if (int(p) - 1) % int(d)]
                    if bad:
                        raise ConfigError(f"primes {bad} are not 1 mod {d}")
                elif mod % int(d) != 0 or res % int(d) != 1 % int(d):
                    raise ConfigError(f"{kind}({d}) needs primes restricted to 1 mod {d}")

    def size_list(self) -> list[int]:
        if self.family["kind"] == "circle_grid":
            return sorted(int(n) for n in self.sizes)
        return select_primes(self.primes)


def select_primes(spec: dict) -> list[int]:
    """Primes from an explicit list or a congruence range; ``count`` keeps a log-spaced subset."""
    if spec.get("list") is not None:
        ps = sorted({int(p) for p in spec["list"]})
        bad = [p for p in ps if not is_prime(p)]
        if bad:
            raise ConfigError(f"not prime: {bad}")
        return ps
    ps = primes_in_range(int(spec.get("min", 2)), int(spec["max"]),
                         int(spec.get("modulus", 1)), int(spec.get("residue", 0)))
    count = spec.get("count")
    if count is None or count >= len(ps):
        return ps
    return log_spaced_subset(ps, int(count))


def log_spaced_subset(values: Sequence[int], count: int) -> list[int]:
    """For targets geometrically spaced from min to max, the nearest value (deduplicated)."""
    vals = np.asarray(sorted(values), dtype=np.float64)
    if count < 2 or len(vals) <= count:
        return [int(v) for v in vals]
    out: list[int] = []
    for t in np.geomspace(vals[0], vals[-1], count):
        i = int(np.argmin(np.abs(np.log(vals) - np.log(t))))
        if int(vals[i]) not in out:
            out.append(int(vals[i]))
    return sorted(out)


# --- families and measures ------------------------------------------------


def build_family(spec: dict, q: int) -> SumFamily:
    kind = spec["kind"]
    ctx = build_field(q, 1)
    if kind == "gaussian_period":
        return gaussian_period_family(ctx, int(spec["d"]))
    if kind == "subgroup_normalized":
        return subgroup_family_normalized(ctx, int(spec["d"]))
    if kind == "rootset":
        return rootset_family(ctx, spec["g"])
    if kind == "kloosterman":
        return kloosterman_family(ctx, int(spec.get("r", 2)))
    if kind == "mellin":
        return mellin_family(ctx)
    raise ConfigError(f"family kind {kind!r} is not a field family")


@dataclass
class Record:
    size: int
    status: str
    w1: float | None = None
    allowance: float = 0.0
    n_atoms: int = 0
    reference_samples: int = 0
    seconds: float = 0.0
    method: str = ""
    bound_value: float | None = None
    duality_gap: float | None = None
    resamples: list = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _planar_distance(mu: Empirical2D, ref, M: int, B: int, seed: int, method: str, merge: bool):
    """Mean and spread of W1 over B independent reference samples."""
    if merge:
        mu = mu.merged(decimals=12)
    vals, gaps = [], []
    for b in range(B):
        nu = ref.sample(M, seed=rng.derive_seed(seed, b))
        if merge:
            nu = nu.merged()
        res = w1_planar(mu, nu, "sinkhorn" if method == "sinkhorn" else "exact")
        vals.append(res.value)
        gaps.append(res.duality_gap)
    spread = float(np.std(vals, ddof=1)) if B > 1 else 0.0
    return float(np.mean(vals)), spread, vals, float(max(gaps)), len(mu.points)


def _as_planar(m):
    if isinstance(m, Empirical1D):
        return Empirical2D.from_values(m.atoms.astype(np.complex128), m.weights, m.source)
    return m


def evaluate_size(cfg: ExperimentConfig, size: int) -> Record:
    """Distance for one prime (or grid size) under the config."""
    t0 = time.perf_counter()
    kind = cfg.family["kind"]
    seed = rng.derive_seed(cfg.seed, size)
    rec = Record(size=size, status="ok", method=cfg.method)
    try:
        if kind == "circle_grid":
            mu = circle_grid(size)
            rec.n_atoms = size
            if cfg.method == "circle":
                rec.w1 = w1_circle(mu, LebesgueCircle())
            elif cfg.method == "fourier":
                rec.bound_value = fourier_bound_torus(mu, LebesgueCircle(), size).bound
                rec.w1 = rec.bound_value
            else:
                raise ConfigError("circle_grid supports the circle and fourier methods")
        else:
            fam = build_family(cfg.family, size)
            if cfg.method == "fourier":
                d = int(cfg.family["d"])
                ctx = fam.field
                orbit = torus_orbit(ctx, cyclotomic_residues(ctx, d), sort=False)
                mu = EmpiricalTorus(orbit.points, np.full(orbit.q, 1.0 / orbit.q), "orbit", True)
                rep = fourier_bound_torus(mu, HaarTorusFourier(cyclotomic_preset(d)), cfg.fourier_T, scan=True)
                rec.n_atoms = orbit.q
                rec.w1 = rep.optimal_bound
                rec.bound_value = rep.optimal_bound
            else:
                mu = empirical_from_family(fam, cfg.exclude_zero)
                n_values = len(mu.atoms) if isinstance(mu, Empirical1D) else len(mu.points)
                ref = make_reference(cfg.reference)
                if cfg.method == "line":
                    if not isinstance(mu, Empirical1D):
                        raise ConfigError("the line method needs a real-valued family")
                    rec.w1, rec.allowance = w1_line(mu, ref, return_error=True)
                    rec.n_atoms = n_values
                else:
                    M = cfg.reference_samples or int(math.ceil(cfg.sample_factor * n_values))
                    rec.reference_samples = M
                    rec.w1, rec.allowance, rec.resamples, rec.duality_gap, rec.n_atoms = _planar_distance(
                        _as_planar(mu), ref, M, cfg.bootstrap, seed, cfg.method, cfg.merge_atoms
                    )
    except EquidistError as exc:
        rec.status = "error"
        rec.message = f"{type(exc).__name__}: {exc}"
    rec.seconds = time.perf_counter() - t0
    return rec


@dataclass
class RateFit:
    pairs: list
    slope: float
    intercept: float
    residuals: list
    bound_check: float | None = None
    bound_constant: float | None = None
    bound_exponent: float | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def fit_rate(pairs: Sequence[tuple[float, float]], bound: tuple[float, float] | None = None) -> RateFit:
    """Least squares of log W1 on log q."""
    pts = [(float(q), float(w)) for q, w in pairs if w is not None and w > 0]
    if len(pts) < 3:
        raise InsufficientData(f"rate fit needs >= 3 successful sizes, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    fit = RateFit(pts, float(slope), float(intercept), resid.tolist())
    if bound is not None:
        c, e = bound
        fit.bound_constant, fit.bound_exponent = float(c), float(e)
        fit.bound_check = max(w * q**e / c for q, w in pts)
    return fit


def default_bound(cfg: ExperimentConfig) -> tuple[float, float] | None:
    if cfg.bound is not None:
        return float(cfg.bound["constant"]), float(cfg.bound["exponent"])
    kind = cfg.family["kind"]
    if kind == "gaussian_period" and is_prime(int(cfg.family["d"])):
        d = int(cfg.family["d"])
        return rate_bound_constant(d, d - 1, 1.0)
    if kind == "circle_grid":
        return 0.25, 1.0
    return None


@dataclass
class SweepResult:
    records: list
    fit: RateFit | None
    config: dict
    fit_error: str = ""

    def to_dict(self, deterministic: bool = True) -> dict:
        records = [r.to_dict() for r in self.records]
        config = dict(self.config)
        if deterministic:
            # timings and the thread count must not change the bytes
            for r in records:
                r.pop("seconds", None)
            config.pop("threads", None)
        return {
            "config": config,
            "fit": self.fit.to_dict() if self.fit else None,
            "fit_error": self.fit_error,
            "records": records,
        }


def sweep(cfg: ExperimentConfig, progress: Callable[[Record], None] | None = None) -> SweepResult:
    """Evaluate every size, then fit log W1 against log size."""
    sizes = cfg.size_list()
    records: dict[int, Record] = {}

    def run(size):
        rec = evaluate_size(cfg, size)
        if progress:
            progress(rec)
        return rec

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        for rec in pool.map(run, sizes):
            records[rec.size] = rec
            if cfg.max_seconds_per_size is not None and rec.seconds > cfg.max_seconds_per_size:
                pool.shutdown(wait=False, cancel_futures=True)
                raise SweepAborted(
                    f"size {rec.size} took {rec.seconds:.1f} s, over the {cfg.max_seconds_per_size} s limit"
                )
    ordered = [records[s] for s in sorted(records)]
    pairs = [(r.size, r.w1) for r in ordered if r.status == "ok"]
    fit, err = None, ""
    try:
        fit = fit_rate(pairs, default_bound(cfg))
    except InsufficientData as exc:
        err = str(exc)
    return SweepResult(ordered, fit, cfg.to_dict(), err)


def check_sweep(result: SweepResult, cfg: ExperimentConfig) -> list[str]:
    """Failed assertions for ``--check`` mode (empty when all hold)."""
    fails = []
    chk = cfg.check or {}
    for r in result.records:
        if r.status != "ok":
            fails.append(f"size {r.size}: {r.message}")
    if result.fit is None:
        fails.append(result.fit_error or "no fit")
        return fails
    if "slope_max" in chk and result.fit.slope > chk["slope_max"]:
        fails.append(f"slope {result.fit.slope:.4f} > {chk['slope_max']}")
    if chk.get("bound", True) and result.fit.bound_constant is not None:
        c, e = result.fit.bound_constant, result.fit.bound_exponent
        k = float(chk.get("allowance_factor", 3.0))
        for r in result.records:
            limit = c * r.size ** (-e)
            if r.status == "ok" and r.w1 > limit * (1 + 1e-12) + k * r.allowance:
                fails.append(f"size {r.size}: W1 {r.w1:.6g} above bound {limit:.6g}")
    return fails


# --- growing subgroups ----------------------------------------------------


def clt_regime_sweep(
    pairs: Sequence[tuple[int, int]],
    M: int | None = None,
    sample_factor: float = 10.0,
    bootstrap: int = 5,
    seed: int = 0,
    method: str = "exact2d",
) -> list[dict]:
    """For each (q, d): W1 of the normalized subgroup sums to the Gaussian and to gamma_d."""
    from .measures import ComplexGaussianHalfId, GammaD

    out = []
    for q, d in pairs:
        t0 = time.perf_counter()
        row: dict[str, Any] = {"q": int(q), "d": int(d)}
        try:
            if not is_prime(d):
                raise ConfigError(f"d = {d} is not prime")
            fam = subgroup_family_normalized(build_field(q), d)
            mu = empirical_from_family(fam, False)
            mu = _as_planar(mu)
            n_atoms = len(mu.merged(decimals=12).points)
            m = M or int(math.ceil(sample_factor * n_atoms))
            s = rng.derive_seed(seed, q, d)
            for name, ref in (("gamma", GammaD(d)), ("gaussian", ComplexGaussianHalfId())):
                w, spread, vals, gap, _ = _planar_distance(mu, ref, m, bootstrap, s, method, True)
                row[f"w1_{name}"] = w
                row[f"allowance_{name}"] = spread
            row["bound_gamma"] = subgroup_rate_bound(q, d)
            row["bound_holds"] = bool(row["w1_gamma"] <= row["bound_gamma"] + 3 * row["allowance_gamma"])
            row["n_atoms"] = n_atoms
            row["reference_samples"] = m
            row["status"] = "ok"
        except EquidistError as exc:
            row["status"] = "error"
            row["message"] = f"{type(exc).__name__}: {exc}"
        row["seconds"] = time.perf_counter() - t0
        out.append(row)
    return out


def gamma_gaussian_trend(
    ds: Sequence[int], M: int, bootstrap: int = 3, seed: int = 0, method: str = "exact2d"
) -> list[dict]:
    """W1(gamma_d, Gaussian) from two independent samples of size M, for each d.

    Both sides are sampled, so every value carries an O(M^(-1/2)) floor; the
    rows are trend data, not certified distances.
    """
    from .measures import ComplexGaussianHalfId, GammaD

    out = []
    for d in ds:
        t0 = time.perf_counter()
        vals = []
        for b in range(bootstrap):
            g = GammaD(d).sample(M, seed=rng.derive_seed(seed, d, b, 0))
            z = ComplexGaussianHalfId().sample(M, seed=rng.derive_seed(seed, d, b, 1))
            vals.append(w1_planar(g, z, "sinkhorn" if method == "sinkhorn" else "exact").value)
        out.append({
            "d": int(d),
            "w1": float(np.mean(vals)),
            "spread": float(np.std(vals, ddof=1)) if bootstrap > 1 else 0.0,
            "resamples": vals,
            "reference_samples": int(M),
            "status": "ok",
            "seconds": time.perf_counter() - t0,
        })
    return out


def shrinking_target_count(family: SumFamily, target: complex, eps: float, exclude_zero: bool | None = None) -> int:
    """#{a : |value(a) - target| <= eps} over the retained indices."""
    from .measures import default_exclude_zero

    if exclude_zero is None:
        exclude_zero = default_exclude_zero(family)
    vals = family.values[family.index != 0] if exclude_zero else family.values
    return int(np.count_nonzero(np.abs(vals - target) <= eps))


# --- output ---------------------------------------------------------------

CSV_FIELDS = ("size", "status", "w1", "allowance", "n_atoms", "reference_samples", "method",
              "bound_value", "duality_gap", "seconds", "message")


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return fmt(x)
    return str(x).replace(",", ";").replace("\n", " ")


def emit(records: Sequence, fmt_name: str, path=None, deterministic: bool = True) -> str:
    """Render records as csv, json or dat (log10 size, log10 W1); write to path if given.

    ``deterministic`` drops timing fields so repeated runs are byte-identical.
    """
    rows = [r.to_dict() if hasattr(r, "to_dict") else dict(r) for r in records]
    if deterministic:
        for r in rows:
            r.pop("seconds", None)
    if fmt_name == "csv":
        cols = [c for c in CSV_FIELDS if not (deterministic and c == "seconds")]
        if rows and "size" not in rows[0]:
            cols = sorted({k for r in rows for k in r})
        lines = [",".join(cols)]
        lines += [",".join(_cell(r.get(c)) for c in cols) for r in rows]
        text = "\n".join(lines) + "\n"
    elif fmt_name == "json":
        text = dumps(rows)
    elif fmt_name == "dat":
        lines = ["# log10_size log10_w1"]
        for r in rows:
            x = r.get("size", r.get("q"))
            w = r.get("w1", r.get("w1_gamma"))
            if r.get("status", "ok") == "ok" and w is not None and w > 0:
                lines.append(f"{fmt(math.log10(x))} {fmt(math.log10(w))}")
        text = "\n".join(lines) + "\n"
    else:
        raise ConfigError(f"unknown format {fmt_name!r}")
    if path is not None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    return text


def load_records(path) -> list[dict]:
    return json.loads(Path(path).read_text())
