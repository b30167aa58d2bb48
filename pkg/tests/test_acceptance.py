"""Acceptance criteria 1-10, each at its stated tolerance and runtime.

Every test records a one-line summary (``detail``) before asserting, so the
terminal summary shows the measured numbers for passes and failures alike.
"""

import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from equidist import harness
from equidist.expsums import kloosterman_direct, kloosterman_family, torus_orbit, weyl_sum
from equidist.ff import build_field, cyclotomic_residues
from equidist.measures import (
    Empirical1D,
    EmpiricalCircle,
    LebesgueCircle,
    SatoTate,
    circle_grid,
    empirical_from_family,
)
from equidist.wasserstein import (
    fourier_bound_torus,
    planar_cost,
    w1_circle,
    w1_exact_discrete,
    w1_line,
    w1_sinkhorn,
    wp_line,
)
from equidist.zlattice import (
    as_int_matrix,
    build_sampler,
    cyclotomic_preset,
    int_det,
    minors_gcd,
    relation_lattice_contains,
    relation_preset_prime,
    relation_preset_prime_power,
    smith_normal_form,
)

DATA = Path(__file__).parent / "data"

pytestmark = pytest.mark.acceptance


def perm_table(n):
    return np.array(list(itertools.permutations(range(n))))


def brute_uniform(C, perms):
    """min over bijections of the mean matched cost (uniform n-atom measures)."""
    n = C.shape[0]
    return float(C[np.arange(n)[None, :], perms].sum(axis=1).min() / n)


class Clock:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


# 1 ---------------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_c01_grid_exactness(record_property):
    with Clock() as clk:
        errs = {N: abs(w1_circle(circle_grid(N), LebesgueCircle()) - 1 / (4 * N)) for N in (2, 10, 100, 1000)}
    worst = max(errs.values())
    record_property("detail", f"max |W1 - 1/(4N)| = {worst:.2e} (tol 1e-9), {clk.seconds:.3f} s (limit 1 s)")
    assert worst <= 1e-9
    assert clk.seconds < 1


# 2 ---------------------------------------------------------------------------


@pytest.mark.criterion(2)
def test_c02_line_cross_validation(record_property):
    rs = np.random.default_rng(20240602)
    perms = perm_table(6)
    cdf_vs_q, vs_brute = 0.0, 0.0
    with Clock() as clk:
        for _ in range(200):
            x, y = rs.normal(size=6), rs.normal(size=6)
            mu, nu = Empirical1D.from_values(x), Empirical1D.from_values(y)
            a = w1_line(mu, nu)
            b = wp_line(mu, nu, 1)
            brute = brute_uniform(np.abs(x[:, None] - y[None, :]), perms)
            cdf_vs_q = max(cdf_vs_q, abs(a - b))
            vs_brute = max(vs_brute, abs(a - brute), abs(b - brute))
    record_property(
        "detail",
        f"CDF vs quantile {cdf_vs_q:.1e} (tol 1e-10), vs brute force {vs_brute:.1e} (tol 1e-9), {clk.seconds:.2f} s",
    )
    assert cdf_vs_q <= 1e-10
    assert vs_brute <= 1e-9
    assert clk.seconds < 5


# 3 ---------------------------------------------------------------------------


@pytest.mark.criterion(3)
def test_c03_exact_planar(record_property):
    rs = np.random.default_rng(3)
    perms = perm_table(5)
    a = np.full(5, 0.2)
    err, gap_ratio = 0.0, 0.0
    with Clock() as clk:
        for _ in range(100):
            C = planar_cost(rs.random((5, 2)), rs.random((5, 2)))
            res = w1_exact_discrete(a, a, C)
            err = max(err, abs(res.value - brute_uniform(C, perms)))
            gap_ratio = max(gap_ratio, abs(res.duality_gap) / (1 + res.value))
    record_property(
        "detail", f"vs brute force {err:.1e} (tol 1e-9), max gap/(1+W1) {gap_ratio:.1e} (tol 1e-7), {clk.seconds:.2f} s"
    )
    assert err <= 1e-9
    assert gap_ratio <= 1e-7
    assert clk.seconds < 10


# 4 ---------------------------------------------------------------------------


@pytest.mark.criterion(4)
def test_c04_sinkhorn_accuracy(record_property):
    rs = np.random.default_rng(4)
    a = np.full(200, 1 / 200)
    rel = []
    with Clock() as clk:
        for _ in range(20):
            C = planar_cost(rs.random((200, 2)), rs.random((200, 2)))
            exact = w1_exact_discrete(a, a, C).value
            rel.append(abs(w1_sinkhorn(a, a, C).value - exact) / exact)
    record_property("detail", f"max relative error {max(rel):.4f} (tol 0.02), {clk.seconds:.1f} s (limit 60 s)")
    assert max(rel) <= 0.02
    assert clk.seconds < 60


# 5 ---------------------------------------------------------------------------


@pytest.mark.criterion(5)
def test_c05_fourier_dominance(record_property):
    rs = np.random.default_rng(5)
    worst_margin = math.inf
    with Clock() as clk:
        for i in range(50):
            n = int(rs.integers(1, 30))
            mu = EmpiricalCircle.from_values(rs.random(n), rs.random(n))
            nu = LebesgueCircle() if i % 2 == 0 else EmpiricalCircle.from_values(rs.random(7))
            exact = w1_circle(mu, nu)
            for T in (1, 4, 16, 64):
                worst_margin = min(worst_margin, fourier_bound_torus(mu, nu, T).bound - exact)
        grid_ratio = 0.0
        for N in (2, 10, 100, 1000):
            rep = fourier_bound_torus(circle_grid(N), LebesgueCircle(), N)
            worst_margin = min(worst_margin, rep.bound - 1 / (4 * N))
            grid_ratio = max(grid_ratio, rep.bound * N)
    record_property(
        "detail", f"min(bound - W1) = {worst_margin:.3e} (>= 0), max N*bound = {grid_ratio:.4f} (<= 9), {clk.seconds:.2f} s"
    )
    assert worst_margin >= 0
    assert grid_ratio <= 9
    assert clk.seconds < 10


# 6 ---------------------------------------------------------------------------


@pytest.mark.criterion(6)
def test_c06_weyl_dichotomy(record_property):
    R = relation_preset_prime(5)
    alphas = np.array(list(itertools.product(range(-2, 3), repeat=5)), dtype=np.int64)
    in_lattice = relation_lattice_contains(R, alphas)
    worst, exceptions, bad = 0.0, [], []
    with Clock() as clk:
        for q in (11, 31, 41):
            ctx = build_field(q)
            orbit = torus_orbit(ctx, cyclotomic_residues(ctx, 5), sort=False)
            for alpha, rel in zip(alphas, in_lattice):
                w = weyl_sum(orbit, alpha)
                dist = min(abs(w), abs(w - 1))
                worst = max(worst, dist)
                is_one = abs(w - 1) < 0.5
                if rel and not is_one:
                    bad.append((q, tuple(alpha)))
                if is_one and not rel:
                    l1 = int(np.abs(alpha).sum())
                    exceptions.append((q, tuple(int(x) for x in alpha)))
                    if q > l1**4:
                        bad.append((q, tuple(alpha)))
    record_property(
        "detail",
        f"max dist to {{0,1}} {worst:.1e} (tol 1e-9), {len(exceptions)} exceptions all with q <= |alpha|_1^4, "
        f"{len(bad)} violations, {clk.seconds:.2f} s",
    )
    assert worst <= 1e-9
    assert not bad
    assert clk.seconds < 5


# 7 ---------------------------------------------------------------------------

C7_CONFIG = {
    "family": {"kind": "gaussian_period", "d": 3},
    "reference": {"type": "haar_pushforward", "d": 3},
    "method": "exact2d",
    # 24 log-spaced primes from the 611 primes q = 1 mod 3 in [7, 10^4], both ends included
    "primes": {"min": 7, "max": 10000, "modulus": 3, "residue": 1, "count": 24},
    "sample_factor": 10.0,
    "bootstrap": 5,
    "seed": 2024,
    "check": {"slope_max": -0.45, "allowance_factor": 3.0},
}


@pytest.mark.criterion(7)
def test_c07_gaussian_period_rate(record_property):
    cfg = harness.ExperimentConfig.from_dict(C7_CONFIG)
    with Clock() as clk:
        res = harness.sweep(cfg)
    fails = harness.check_sweep(res, cfg)
    ratio = max(r.w1 / (48 * r.size**-0.5) for r in res.records if r.status == "ok")
    record_property(
        "detail",
        f"{len(res.records)} primes 7..{res.records[-1].size}, max W1/(48 q^-1/2) = {ratio:.3f}, "
        f"slope {res.fit.slope:.3f} (<= -0.45), {clk.seconds:.0f} s (limit 600 s)",
    )
    assert all(r.status == "ok" for r in res.records)
    assert res.records[-1].size == 9973
    assert not fails, fails
    assert res.fit.slope <= -0.45
    assert clk.seconds < 600


# 8 ---------------------------------------------------------------------------


@pytest.mark.criterion(8)
def test_c08_kloosterman_sato_tate(record_property):
    prereg = json.loads((DATA / "preregistration.json").read_text())
    frozen = {row["p"]: row for row in prereg["kl2_sato_tate"]}
    with Clock() as clk:
        ctx61 = build_field(61)
        fft_err = 0.0
        for r in (2, 3):
            fam = kloosterman_family(ctx61, r)
            direct = np.array([kloosterman_direct(ctx61, r, a) for a in range(1, 61)])
            fft_err = max(fft_err, float(np.max(np.abs(fam.values[1:] - direct))))
        rows = []
        for p in (101, 1009, 10007):
            mu = empirical_from_family(kloosterman_family(build_field(p), 2))
            rows.append((p, w1_line(mu, SatoTate())))
    slope = float(np.polyfit(np.log([p for p, _ in rows]), np.log([w for _, w in rows]), 1)[0])
    prereg_dev = max(abs(w - frozen[p]["w1"]) for p, w in rows)
    scaled = ", ".join(f"{w * p ** (1 / 3):.3f}" for p, w in rows)
    record_property(
        "detail",
        f"W1 p^(1/3) = [{scaled}] (<= 1), slope {slope:.3f} (<= -0.25), FFT vs direct {fft_err:.1e} (tol 1e-8), "
        f"vs pre-registration {prereg_dev:.1e}, {clk.seconds:.1f} s",
    )
    assert all(w <= p ** (-1 / 3) for p, w in rows)
    assert slope <= -0.25
    assert fft_err <= 1e-8
    assert prereg_dev <= 1e-9
    assert clk.seconds < 300


# 9 ---------------------------------------------------------------------------

C9_PAIRS = [(211, 5), (2311, 7), (30109, 13)]


@pytest.mark.criterion(9)
def test_c09_growing_subgroup_bound(record_property):
    with Clock() as clk:
        rows = harness.clt_regime_sweep(C9_PAIRS, bootstrap=5, seed=9)
    summary = ", ".join(
        f"({r['q']},{r['d']}): {r.get('w1_gamma', float('nan')):.4f} <= {r.get('bound_gamma', float('nan')):.1f}"
        for r in rows
    )
    record_property("detail", f"W1 to gamma_d vs bound: {summary}, {clk.seconds:.0f} s (limit 300 s)")
    for r in rows:
        assert r["status"] == "ok", r
        assert r["w1_gamma"] <= r["bound_gamma"] + 3 * r["allowance_gamma"]
    assert clk.seconds < 300


# 10 --------------------------------------------------------------------------


def _check_snf(A):
    snf = smith_normal_form(A)
    M = as_int_matrix(A)
    assert (snf.U.dot(M).dot(snf.V) == snf.D).all()
    assert abs(int_det(snf.U)) == 1 and abs(int_det(snf.V)) == 1
    D = snf.D.copy()
    diag = list(snf.diagonal)
    for i in range(len(diag)):
        D[i, i] = 0
    assert not D.any()
    nz = [d for d in diag if d]
    assert all(d > 0 for d in nz) and all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert all(d == 0 for d in diag[len(nz):])
    prod = 1
    for k in range(1, min(M.shape) + 1):
        prod *= diag[k - 1]
        assert prod == minors_gcd(M, k)


@pytest.mark.criterion(10)
def test_c10_snf_and_sampler(record_property):
    rs = np.random.default_rng(10)
    with Clock() as clk:
        for i in range(500):
            m, n = rs.integers(1, 7, 2)
            hi = [3, 10, 100][i % 3]
            A = rs.integers(-hi, hi + 1, (m, n))
            if i % 5 == 0 and m > 1:
                A[-1] = A[0] * int(rs.integers(-3, 4))  # force rank deficiency
            _check_snf(A.tolist())
        snf_seconds = clk.seconds if hasattr(clk, "seconds") else time.perf_counter() - clk.t0
        defects = {}
        presets = {3: relation_preset_prime(3), 5: relation_preset_prime(5),
                   4: relation_preset_prime_power(2, 2), 8: relation_preset_prime_power(2, 3),
                   9: relation_preset_prime_power(3, 2)}
        for d, R in presets.items():
            assert R.generators.tolist() == cyclotomic_preset(d).generators.tolist()
            s = build_sampler(R, seed=d)
            defects[d] = s.character_defect(s.sample(10_000))
    worst = max(defects.values())
    record_property(
        "detail", f"500 SNFs verified, max character defect {worst:.1e} (tol 1e-9), {clk.seconds:.1f} s (limit 30 s)"
    )
    assert worst <= 1e-9
    assert clk.seconds < 30
