"""Entropic optimal transport with epsilon annealing, in the log domain.

Potentials live in the log domain; between exact log-domain sweeps the
iterations run on scaling vectors against the absorbed kernel
exp((f + g - C) / eps), which are folded back into the potentials before
they can overflow.

The returned value is the cost of the rounded plan (exact marginals), so it is
an upper bound on W1. A feasible dual pair is recovered by c-transforms of the
Sinkhorn potentials, which gives a lower bound and hence a certified gap.
"""

from __future__ import annotations

import warnings

import numpy as np
from numba import njit

from ..errors import MassMismatch
from .result import TransportResult


class NonConvergenceWarning(RuntimeWarning):
    pass


@njit(cache=True)
def _row_update(C, g, lb, eps, out):
    """out_i = -eps * log sum_j exp((g_j - C_ij) / eps + lb_j)."""
    n, m = C.shape
    for i in range(n):
        mx = -np.inf
        for j in range(m):
            t = (g[j] - C[i, j]) / eps + lb[j]
            if t > mx:
                mx = t
        s = 0.0
        for j in range(m):
            s += np.exp((g[j] - C[i, j]) / eps + lb[j] - mx)
        out[i] = -eps * (mx + np.log(s))


@njit(cache=True)
def _col_update(C, f, la, eps, out):
    n, m = C.shape
    mx = np.full(m, -np.inf)
    for i in range(n):
        for j in range(m):
            t = (f[i] - C[i, j]) / eps + la[i]
            if t > mx[j]:
                mx[j] = t
    s = np.zeros(m)
    for i in range(n):
        for j in range(m):
            s[j] += np.exp((f[i] - C[i, j]) / eps + la[i] - mx[j])
    for j in range(m):
        out[j] = -eps * (mx[j] + np.log(s[j]))


@njit(cache=True)
def _row_error(C, f, g, la, lb, eps, a):
    """L1 distance between the row sums of the current plan and a."""
    n, m = C.shape
    err = 0.0
    for i in range(n):
        s = 0.0
        for j in range(m):
            s += np.exp((f[i] + g[j] - C[i, j]) / eps + la[i] + lb[j])
        err += abs(s - a[i])
    return err


def default_schedule(cost: np.ndarray, stages: int = 8) -> np.ndarray:
    mean = float(cost.mean())
    return np.geomspace(0.5 * mean, 0.005 * mean, stages)


def _round_plan(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Project onto the transport polytope (Altschuler, Weed and Rigollet rounding)."""
    r = P.sum(axis=1)
    x = np.minimum(1.0, np.divide(a, r, out=np.ones_like(a), where=r > 0))
    P = P * x[:, None]
    c = P.sum(axis=0)
    y = np.minimum(1.0, np.divide(b, c, out=np.ones_like(b), where=c > 0))
    P = P * y[None, :]
    ea = a - P.sum(axis=1)
    eb = b - P.sum(axis=0)
    s = ea.sum()
    if s > 0:
        P = P + np.outer(ea, eb) / s
    return P


def w1_sinkhorn(
    a,
    b,
    cost,
    eps_schedule=None,
    tol: float = 1e-6,
    max_iter: int = 200000,
    stage_tol: float = 1e-4,
    absorb_every: int = 200,
) -> TransportResult:
    """Entropic approximation of W1 for weights a, b and a dense cost matrix."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    C = np.asarray(cost, dtype=np.float64)
    if abs(a.sum() - b.sum()) > 1e-9:
        raise MassMismatch("total masses differ")
    b = b * (a.sum() / b.sum())
    schedule = default_schedule(C) if eps_schedule is None else np.asarray(eps_schedule, float)
    C = np.ascontiguousarray(C)
    la, lb = np.log(a), np.log(b)
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    stage_values = []
    iters = 0
    converged = True
    err = np.inf
    for k, eps in enumerate(schedule):
        last = k == len(schedule) - 1
        target = tol if last else max(tol, stage_tol)
        it = 0
        done = False
        while it < max_iter and not done:
            # exact log-domain sweep, then scaling steps on the absorbed kernel
            _row_update(C, g, lb, eps, f)
            _col_update(C, f, la, eps, g)
            it += 1
            K = np.exp((f[:, None] + g[None, :] - C) / eps)
            u = np.ones(len(a))
            v = np.ones(len(b))
            for inner in range(absorb_every):
                u_new = 1.0 / (K @ (b * v))
                v_new = 1.0 / (K.T @ (a * u_new))
                if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
                    break
                u, v = u_new, v_new
                it += 1
                if inner % 10 == 9 or it >= max_iter:
                    err = 0.5 * np.abs(a * u * (K @ (b * v)) - a).sum()
                    if err <= target:
                        done = True
                        break
                if it >= max_iter or max(np.abs(np.log(u)).max(), np.abs(np.log(v)).max()) > 30:
                    break
            f += eps * np.log(u)
            g += eps * np.log(v)
        iters += it
        if not done and last:
            converged = False
        logP = (f[:, None] + g[None, :] - C) / eps + la[:, None] + lb[None, :]
        P = np.exp(logP)
        stage_values.append(float(np.sum(P * C)))
    marginal_tv = 0.5 * (np.abs(P.sum(axis=1) - a).sum() + np.abs(P.sum(axis=0) - b).sum())
    P = _round_plan(P, a, b)
    value = float(np.sum(P * C))
    # c-transforms give a feasible dual pair
    v = np.min(C - f[:, None], axis=0)
    u = np.min(C - v[None, :], axis=1)
    dual = float(a @ u + b @ v)
    if not converged:
        warnings.warn("Sinkhorn reached max_iter before the marginal tolerance", NonConvergenceWarning)
    rows, cols = np.nonzero(P > 1e-15)
    return TransportResult(
        value=value,
        method="sinkhorn",
        u=u,
        v=v,
        dual_value=dual,
        duality_gap=value - dual,
        iterations=iters,
        converged=converged,
        marginal_error=float(marginal_tv),
        plan=(rows, cols, P[rows, cols]),
        extras={"eps_schedule": schedule.tolist(), "stage_values": stage_values},
    )
