import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, stats

from equidist.errors import MassMismatch, SizeGuard, ValueOutOfRange
from equidist.measures import (
    Empirical1D,
    Empirical2D,
    EmpiricalCircle,
    EmpiricalTorus,
    LebesgueCircle,
    LebesgueTorus,
    SatoTate,
    circle_grid,
)
from equidist.wasserstein import (
    fourier_bound_torus,
    planar_cost,
    rate_bound_constant,
    su2_borda_diagnostic,
    subgroup_rate_bound,
    torus_cost,
    w1_circle,
    w1_exact_discrete,
    w1_line,
    w1_planar,
    w1_planar_sparse,
    w1_sinkhorn,
    w1_torus_exact,
    wp_line,
)
from equidist.wasserstein.netsimplex import INFEASIBLE, OPTIMAL, NetworkSimplex
from equidist.wasserstein.result import dumps


def perm_brute(C):
    n = C.shape[0]
    return min(C[np.arange(n), list(p)].sum() for p in itertools.permutations(range(n))) / n


def lp_oracle(a, b, C):
    n, m = C.shape
    A_eq = np.zeros((n + m, n * m))
    for i in range(n):
        A_eq[i, i * m : (i + 1) * m] = 1
    for j in range(m):
        A_eq[n + j, j::m] = 1
    res = optimize.linprog(C.ravel(), A_eq=A_eq, b_eq=np.r_[a, b], bounds=(0, None), method="highs")
    return res.fun


# --- line ---------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=25),
    st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=25),
)
def test_w1_line_matches_scipy(xs, ys):
    got = w1_line(Empirical1D.from_values(xs), Empirical1D.from_values(ys))
    assert got == pytest.approx(stats.wasserstein_distance(xs, ys), abs=1e-9)


def test_w1_line_symmetry_and_translation():
    rs = np.random.default_rng(1)
    x, y = rs.normal(size=40), rs.normal(size=30)
    mu, nu = Empirical1D.from_values(x), Empirical1D.from_values(y)
    assert w1_line(mu, nu) == pytest.approx(w1_line(nu, mu), abs=1e-14)
    assert w1_line(mu, Empirical1D.from_values(x + 0.7)) == pytest.approx(0.7, abs=1e-14)


def test_w1_line_against_sato_tate_by_quadrature():
    # single atom at 0: W1 = E|X| under Sato-Tate = 8 / (3 pi)
    mu = Empirical1D.from_values([0.0])
    assert w1_line(mu, SatoTate()) == pytest.approx(8 / (3 * math.pi), abs=1e-12)


def test_wp_line_orders():
    rs = np.random.default_rng(2)
    mu = Empirical1D.from_values(rs.random(6))
    nu = Empirical1D.from_values(rs.random(6))
    w1, w2 = wp_line(mu, nu, 1), wp_line(mu, nu, 2)
    assert w1 == pytest.approx(w1_line(mu, nu), abs=1e-12)
    assert w1 <= w2 + 1e-12
    C2 = np.abs(mu.atoms[:, None] - nu.atoms[None, :]) ** 2
    assert w2 == pytest.approx(math.sqrt(perm_brute(C2)), abs=1e-10)


# --- circle -------------------------------------------------------------


def circle_brute(x, y):
    """Uniform n-atom circle measures: minimum over matchings of arc length."""
    d = np.abs(x[:, None] - y[None, :])
    return perm_brute(np.minimum(d, 1 - d))


@pytest.mark.parametrize("seed", range(10))
def test_w1_circle_matches_matching(seed):
    rs = np.random.default_rng(seed)
    x, y = rs.random(6), rs.random(6)
    got = w1_circle(EmpiricalCircle.from_values(x), EmpiricalCircle.from_values(y))
    assert got == pytest.approx(circle_brute(x, y), abs=1e-12)


@pytest.mark.parametrize("N", [1, 2, 7, 100])
def test_w1_circle_grid_is_quarter_over_n(N):
    assert w1_circle(circle_grid(N), LebesgueCircle()) == pytest.approx(1 / (4 * N), abs=1e-15)


# --- exact discrete -----------------------------------------------------


@pytest.mark.parametrize("seed", range(8))
def test_exact_discrete_matches_linprog(seed):
    rs = np.random.default_rng(seed)
    n, m = rs.integers(2, 12, 2)
    a = rs.random(n)
    b = rs.random(m)
    a /= a.sum()
    b /= b.sum()
    C = planar_cost(rs.random((n, 2)), rs.random((m, 2)))
    res = w1_exact_discrete(a, b, C)
    assert res.value == pytest.approx(lp_oracle(a, b, C), abs=1e-10)
    assert abs(res.duality_gap) <= 1e-9
    # the dual pair is feasible
    assert np.all(res.u[:, None] + res.v[None, :] <= C + 1e-9)


def test_exact_discrete_plan_marginals():
    rs = np.random.default_rng(5)
    a = np.full(7, 1 / 7)
    b = np.full(5, 1 / 5)
    C = planar_cost(rs.random((7, 2)), rs.random((5, 2)))
    res = w1_exact_discrete(a, b, C)
    rows, cols, mass = res.plan
    assert np.allclose(np.bincount(rows, mass, 7), a)
    assert np.allclose(np.bincount(cols, mass, 5), b)
    assert res.value == pytest.approx(float(np.sum(C[rows, cols] * mass)), abs=1e-14)


def test_exact_discrete_guards():
    with pytest.raises(MassMismatch):
        w1_exact_discrete([0.5, 0.5], [1.0, 0.5], np.ones((2, 2)))
    with pytest.raises(SizeGuard):
        w1_exact_discrete(np.ones(3) / 3, np.ones(3) / 3, np.ones((3, 3)), guard=4)


def test_network_simplex_infeasible_arc_set():
    ns = NetworkSimplex(np.array([1.0, 0.0, -1.0]))
    ns.add_arcs(np.array([0]), np.array([1]), np.array([1.0]))
    status = ns.solve()
    assert status == INFEASIBLE or ns.artificial_flow() > 0
    ns2 = NetworkSimplex(np.array([1.0, -1.0]))
    ns2.add_arcs(np.array([0]), np.array([1]), np.array([2.5]))
    assert ns2.solve() == OPTIMAL


def test_sparse_matches_dense():
    rs = np.random.default_rng(3)
    X, Y = rs.normal(size=(300, 2)), rs.normal(size=(900, 2))
    a, b = np.full(300, 1 / 300), np.full(900, 1 / 900)
    dense = w1_exact_discrete(a, b, planar_cost(X, Y))
    sparse = w1_planar_sparse(X, a, Y, b, knn=4)
    assert sparse.value == pytest.approx(dense.value, abs=1e-10)
    assert abs(sparse.duality_gap) <= 1e-8


def test_torus_exact_matches_brute():
    rs = np.random.default_rng(8)
    P, Q = rs.random((5, 2)), rs.random((5, 2))
    res = w1_torus_exact(EmpiricalTorus.from_points(P), EmpiricalTorus.from_points(Q))
    assert res.value == pytest.approx(perm_brute(torus_cost(P, Q)), abs=1e-12)


# --- Sinkhorn -----------------------------------------------------------


def test_sinkhorn_brackets_exact():
    rs = np.random.default_rng(4)
    X, Y = rs.random((60, 2)), rs.random((60, 2))
    a = b = np.full(60, 1 / 60)
    C = planar_cost(X, Y)
    exact = w1_exact_discrete(a, b, C).value
    sk = w1_sinkhorn(a, b, C)
    assert sk.dual_value - 1e-12 <= exact <= sk.value + 1e-12
    assert abs(sk.value - exact) / exact <= 0.02
    assert sk.duality_gap >= -1e-12


def test_w1_planar_dispatch():
    rs = np.random.default_rng(6)
    mu = Empirical2D.from_values(rs.normal(size=20) + 1j * rs.normal(size=20))
    nu = Empirical2D.from_values(rs.normal(size=25) + 1j * rs.normal(size=25))
    exact = w1_planar(mu, nu)
    assert exact.method.startswith("exact") or exact.method == "network_simplex"
    with pytest.raises(ValueOutOfRange):
        w1_planar(mu, nu, "bogus")


def test_result_json_is_stable():
    res = w1_exact_discrete([0.5, 0.5], [0.5, 0.5], np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert res.value == 0
    assert res.to_json() == res.to_json()
    assert dumps({"b": 1 / 3, "a": [1.0]}) == dumps({"a": [1.0], "b": 1 / 3})


# --- Fourier bound and constants ----------------------------------------


@pytest.mark.parametrize("seed", range(6))
def test_fourier_bound_dominates_exact_torus(seed):
    rs = np.random.default_rng(seed)
    k = 1 + seed % 2
    mu = EmpiricalTorus.from_points(rs.random((6, k)))
    nu = EmpiricalTorus.from_points(rs.random((5, k)))
    exact = w1_torus_exact(mu, nu).value
    for T in (1, 3, 8):
        assert fourier_bound_torus(mu, nu, T).bound >= exact


def test_fourier_bound_grid_closed_form():
    # nonzero coefficients of grid minus Lebesgue sit at h = +-N, +-2N, ...
    N = 10
    rep = fourier_bound_torus(circle_grid(N), LebesgueCircle(), N)
    assert rep.head_term == pytest.approx(4 * math.sqrt(3) / N)
    assert rep.tail_term == pytest.approx(math.sqrt(2) / N)
    assert rep.bound <= 9 / N
    scan = fourier_bound_torus(circle_grid(N), LebesgueCircle(), 4 * N, scan=True)
    assert scan.optimal_bound <= scan.bound + 1e-15


def test_fourier_bound_lebesgue_self_is_head_only():
    rep = fourier_bound_torus(LebesgueTorus(2), LebesgueTorus(2), 5)
    assert rep.tail_term == 0


def test_rate_constants():
    assert rate_bound_constant(3, 2, 1) == (48.0, 0.5)
    c, e = rate_bound_constant(5, 4, 16)
    assert c == pytest.approx(4 * math.sqrt(3) * math.sqrt(5) * 6 * 2) and e == 0.25
    assert subgroup_rate_bound(211, 5) == pytest.approx(4 * math.sqrt(3) * math.sqrt(5) * 6 * 211 ** (-0.25))
    with pytest.raises(ValueOutOfRange):
        rate_bound_constant(0, 1)


def test_borda_diagnostic():
    assert su2_borda_diagnostic([0, 0, 0]) == pytest.approx(1 / 3)
    assert su2_borda_diagnostic([3.0], 1) == pytest.approx(1 + math.sqrt(3))
