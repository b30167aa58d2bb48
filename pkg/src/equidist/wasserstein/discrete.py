"""Exact discrete optimal transport with dual certificates.

Dense instances go straight to the network simplex. Large planar instances
use column generation: solve on a sparse arc set (nearest neighbours plus a
Hilbert-curve north-west-corner plan), then scan all pairs for arcs with
negative reduced cost, add them, and warm-start. On exit no pair violates
dual feasibility, so the result is optimal for the full problem.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from ..errors import InfeasibleTransport, MassMismatch, SizeGuard, ValueOutOfRange
from ..measures import Empirical2D, EmpiricalTorus
from .netsimplex import INFEASIBLE, MAX_ITER_REACHED, NetworkSimplex
from .result import TransportResult

DENSE_GUARD = 4_000_000
# above this many pairs, planar problems go to column generation (much faster there)
PLANAR_DENSE_MAX = 50_000
MASS_TOL = 1e-9


def _common_scale(a: np.ndarray, b: np.ndarray, max_den: int = 10**7) -> float:
    """Factor L making all masses integers, or 1.0 if none is found."""
    den = 1
    for w in np.unique(np.r_[a, b]):
        f = Fraction(float(w)).limit_denominator(max_den)
        if abs(float(f) - w) > 1e-15 * max(1.0, abs(w)):
            return 1.0
        den = math.lcm(den, f.denominator)
        if den > 10**13:
            return 1.0
    return float(den)


def _scaled_supplies(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueOutOfRange("masses must be nonnegative")
    if abs(a.sum() - b.sum()) > MASS_TOL:
        raise MassMismatch(f"total masses differ: {a.sum():.17g} vs {b.sum():.17g}")
    L = _common_scale(a, b)
    sa, sb = np.round(a * L) if L > 1 else a, np.round(b * L) if L > 1 else b
    if L == 1.0:
        # fold the float mismatch into the largest sink
        sb = sb.copy()
        sb[np.argmax(sb)] += sa.sum() - sb.sum()
    return sa, sb, L


def _finish(ns: NetworkSimplex, n: int, a, b, L: float, method: str, status: int, extra=None):
    if status == INFEASIBLE:
        raise InfeasibleTransport("the arc set admits no feasible plan")
    src, tgt, cost = ns.arcs()
    flow = ns.arc_flow
    value = float(np.dot(flow, cost) / L)
    u = -ns.potentials[:n].copy()
    v = ns.potentials[n:].copy()
    shift = u.max() if u.size else 0.0
    u -= shift
    v += shift
    dual = float(np.dot(a, u) + np.dot(b, v))
    keep = flow > 0
    plan = (src[keep].copy(), tgt[keep] - n, flow[keep] / L)
    res = TransportResult(
        value=value,
        method=method,
        u=u,
        v=v,
        dual_value=dual,
        duality_gap=value - dual,
        iterations=int(ns.n_pivots),
        converged=status != MAX_ITER_REACHED,
        plan=plan,
        extras=extra or {},
    )
    return res


def w1_exact_discrete(a, b, cost, guard: int = DENSE_GUARD, max_iter: int = 10**9) -> TransportResult:
    """Optimal transport between weight vectors a (sources) and b (sinks) for a cost matrix."""
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n * m > guard:
        raise SizeGuard(f"{n} x {m} cost entries exceed the guard {guard}")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (n,) or b.shape != (m,):
        raise ValueOutOfRange("weight vectors do not match the cost matrix")
    sa, sb, L = _scaled_supplies(a, b)
    ns = NetworkSimplex(np.r_[sa, -sb], n * m)
    I, J = np.divmod(np.arange(n * m), m)
    ns.add_arcs(I, J + n, cost.ravel())
    status = ns.solve(max_iter=max_iter)
    res = _finish(ns, n, a, b, L, "network_simplex", status)
    viol = np.max(res.u[:, None] + res.v[None, :] - cost, initial=0.0)
    res.extras["dual_violation"] = float(max(viol, 0.0))
    return res


def planar_cost(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    d = X[:, None, :] - Y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", d, d))


def torus_cost(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    d = np.abs(P[:, None, :] - Q[None, :, :]) % 1.0
    d = np.minimum(d, 1.0 - d)
    return np.sqrt(np.einsum("ijk,ijk->ij", d, d))


def w1_torus_exact(mu: EmpiricalTorus, nu: EmpiricalTorus) -> TransportResult:
    return w1_exact_discrete(mu.weights, nu.weights, torus_cost(mu.points, nu.points))


# --- sparse planar solver ------------------------------------------------


@njit(cache=True)
def _price(X, Y, u, v, tol, per_sink):
    """For each sink j, up to ``per_sink`` sources with the most negative reduced cost."""
    n = X.shape[0]
    m = Y.shape[0]
    out_i = np.empty(m * per_sink, np.int64)
    out_j = np.empty(m * per_sink, np.int64)
    best_c = np.empty(per_sink)
    best_i = np.empty(per_sink, np.int64)
    cnt = 0
    worst = 0.0
    for j in range(m):
        for s in range(per_sink):
            best_c[s] = -tol
            best_i[s] = -1
        for i in range(n):
            dx = X[i, 0] - Y[j, 0]
            dy = X[i, 1] - Y[j, 1]
            c = math.sqrt(dx * dx + dy * dy) - u[i] - v[j]
            if c < best_c[per_sink - 1]:
                s = per_sink - 1
                while s > 0 and c < best_c[s - 1]:
                    best_c[s] = best_c[s - 1]
                    best_i[s] = best_i[s - 1]
                    s -= 1
                best_c[s] = c
                best_i[s] = i
        for s in range(per_sink):
            if best_i[s] >= 0:
                out_i[cnt] = best_i[s]
                out_j[cnt] = j
                cnt += 1
        if best_c[0] < worst:
            worst = best_c[0]
    return out_i[:cnt], out_j[:cnt], worst


def hilbert_index(P: np.ndarray, order: int = 16) -> np.ndarray:
    """Position of each 2-D point along a Hilbert curve over the bounding box."""
    P = np.asarray(P, dtype=np.float64)
    lo = P.min(axis=0)
    span = float(np.ptp(P, axis=0).max()) or 1.0
    side = 1 << order
    xy = np.minimum(((P - lo) / span * (side - 1)).astype(np.int64), side - 1)
    x, y = xy[:, 0].copy(), xy[:, 1].copy()
    d = np.zeros(len(P), dtype=np.int64)
    s = side >> 1
    while s > 0:
        rx = (x & s) > 0
        ry = (y & s) > 0
        d += s * s * ((3 * rx) ^ ry)
        flip = ~ry & rx
        x[flip] = s - 1 - x[flip]
        y[flip] = s - 1 - y[flip]
        swap = ~ry
        x[swap], y[swap] = y[swap].copy(), x[swap].copy()
        s >>= 1
    return d


@njit(cache=True)
def _nw_corner(a, b):
    n, m = a.shape[0], b.shape[0]
    I = np.empty(n + m, np.int64)
    J = np.empty(n + m, np.int64)
    i = j = 0
    ra, rb = a[0], b[0]
    k = 0
    while True:
        I[k] = i
        J[k] = j
        k += 1
        f = min(ra, rb)
        ra -= f
        rb -= f
        if i == n - 1 and j == m - 1:
            break
        if ra <= rb and i < n - 1:
            i += 1
            ra = a[i]
        else:
            j += 1
            rb = b[j]
    return I[:k], J[:k]


def _seed_arcs(X, Y, a, b, knn: int):
    n, m = len(X), len(Y)
    h = hilbert_index(np.vstack([X, Y]))
    hx, hy = np.argsort(h[:n], kind="stable"), np.argsort(h[n:], kind="stable")
    I0, J0 = _nw_corner(a[hx], b[hy])
    I0, J0 = hx[I0], hy[J0]
    k = min(knn, n)
    _, nn = cKDTree(X).query(Y, k)
    nn = np.asarray(nn).reshape(m, k)
    I = np.r_[I0, nn.ravel()]
    J = np.r_[J0, np.repeat(np.arange(m), k)]
    key = np.unique(I * m + J)
    return key // m, key % m


def w1_planar_sparse(
    X: np.ndarray,
    a: np.ndarray,
    Y: np.ndarray,
    b: np.ndarray,
    knn: int = 6,
    per_sink: int = 2,
    max_rounds: int = 200,
) -> TransportResult:
    """Exact planar W1 by column generation over all n*m pairs."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    n, m = len(X), len(Y)
    sa, sb, L = _scaled_supplies(a, b)
    I, J = _seed_arcs(X, Y, sa, sb, knn)
    ns = NetworkSimplex(np.r_[sa, -sb], 4 * len(I))
    ns.add_arcs(I, J + n, np.linalg.norm(X[I] - Y[J], axis=1))
    both = np.vstack([X, Y])
    diam = float(np.linalg.norm(np.ptp(both, axis=0)))
    tol = 1e-12 * (1.0 + diam)
    rounds = 0
    while True:
        status = ns.solve(cost_scale=diam)
        if status == INFEASIBLE:
            raise InfeasibleTransport("seed arcs do not support a feasible plan")
        u = -ns.potentials[:n]
        v = ns.potentials[n:]
        ai, aj, worst = _price(X, Y, np.ascontiguousarray(u), np.ascontiguousarray(v), tol, per_sink)
        rounds += 1
        if len(ai) == 0 or rounds >= max_rounds:
            break
        ns.add_arcs(ai, aj + n, np.linalg.norm(X[ai] - Y[aj], axis=1))
    res = _finish(ns, n, np.asarray(a, float), np.asarray(b, float), L, "network_simplex_colgen", status,
                  {"rounds": rounds, "arcs": int(ns.n_total - n), "dual_violation": float(max(-worst, 0.0))})
    res.converged = res.converged and len(ai) == 0
    return res


def w1_planar(mu: Empirical2D, nu: Empirical2D, method: str = "exact", **kw) -> TransportResult:
    """W1 between planar measures; ``exact`` uses column generation beyond PLANAR_DENSE_MAX pairs."""
    if method == "sinkhorn":
        from .sinkhorn import w1_sinkhorn

        return w1_sinkhorn(mu.weights, nu.weights, planar_cost(mu.xy, nu.xy), **kw)
    if method != "exact":
        raise ValueOutOfRange(f"unknown planar method {method!r}")
    n, m = len(mu.points), len(nu.points)
    if n * m <= PLANAR_DENSE_MAX:
        return w1_exact_discrete(mu.weights, nu.weights, planar_cost(mu.xy, nu.xy))
    return w1_planar_sparse(mu.xy, mu.weights, nu.xy, nu.weights, **kw)
