"""Primal network simplex for uncapacitated transportation problems.

The spanning tree is stored as parent/pred/thread arrays with subtree sizes.
Entering arcs come from a block search; the leaving-arc rule keeps the tree
strongly feasible, which rules out cycling on degenerate pivots.

Node ``n_nodes`` is the artificial root. Arc ``u < n_nodes`` is the
artificial arc joining node ``u`` to the root; real arcs follow, so arcs can
be appended between solves and the current basis stays valid (a warm start).
"""

import numpy as np
from numba import njit

UP = 1
DOWN = -1
LOWER = 1
TREE = 0

OPTIMAL = 0
INFEASIBLE = 1
MAX_ITER_REACHED = 2


@njit(cache=True)
def _init_tree(n_nodes, supply, src, tgt, cost, flow, state, parent, pred,
               pred_dir, thread, rev_thread, succ_num, last_succ, pi, art_cost):
    root = n_nodes
    parent[root] = -1
    pred[root] = -1
    pred_dir[root] = 0
    succ_num[root] = n_nodes + 1
    if n_nodes > 0:
        thread[root] = 0
        rev_thread[0] = root
        last_succ[root] = n_nodes - 1
    else:
        thread[root] = root
        rev_thread[root] = root
        last_succ[root] = root
    pi[root] = 0.0
    for u in range(n_nodes):
        parent[u] = root
        pred[u] = u
        succ_num[u] = 1
        last_succ[u] = u
        if u + 1 < n_nodes:
            thread[u] = u + 1
            rev_thread[u + 1] = u
        else:
            thread[u] = root
            rev_thread[root] = u
        cost[u] = art_cost
        state[u] = TREE
        if supply[u] >= 0:
            pred_dir[u] = UP
            src[u] = u
            tgt[u] = root
            flow[u] = supply[u]
            pi[u] = -art_cost
        else:
            pred_dir[u] = DOWN
            src[u] = root
            tgt[u] = u
            flow[u] = -supply[u]
            pi[u] = art_cost


@njit(cache=True)
def _potentials_from_tree(root, thread, parent, pred, pred_dir, cost, pi):
    pi[root] = 0.0
    u = thread[root]
    while u != root:
        pi[u] = pi[parent[u]] - pred_dir[u] * cost[pred[u]]
        u = thread[u]


@njit(cache=True)
def _pivot_loop(n_nodes, n_total, src, tgt, cost, flow, state, parent, pred,
                pred_dir, thread, rev_thread, succ_num, last_succ, pi,
                child_head, sibling, nodes_s, order, stack, eps, max_iter,
                next_arc):
    """Pivot until no real arc prices out; returns (status, pivots, next_arc)."""
    root = n_nodes
    first_real = n_nodes
    n_real = n_total - n_nodes
    if n_real <= 0:
        return OPTIMAL, 0, 0
    block = max(int(np.sqrt(n_real)), 10)
    n_pivots = 0
    status = OPTIMAL
    if next_arc >= n_real:
        next_arc = 0

    while True:
        while True:
            if n_pivots >= max_iter:
                status = MAX_ITER_REACHED
                break
            in_arc = -1
            best = -eps
            cnt = block
            found = False
            for k in range(n_real):
                idx = next_arc + k
                if idx >= n_real:
                    idx -= n_real
                e = first_real + idx
                if state[e] == LOWER:
                    c = cost[e] + pi[src[e]] - pi[tgt[e]]
                    if c < best:
                        best = c
                        in_arc = e
                cnt -= 1
                if cnt == 0:
                    if in_arc >= 0:
                        next_arc = idx + 1
                        if next_arc >= n_real:
                            next_arc = 0
                        found = True
                        break
                    cnt = block
            if not found and in_arc < 0:
                break

            u = src[in_arc]
            v = tgt[in_arc]
            while u != v:
                if succ_num[u] < succ_num[v]:
                    u = parent[u]
                else:
                    v = parent[v]
            join = u

            first = src[in_arc]
            second = tgt[in_arc]
            delta = np.inf
            result = 0
            u_out = -1
            u = first
            while u != join:
                if pred_dir[u] == UP:
                    d = flow[pred[u]]
                    if d < delta:
                        delta = d
                        u_out = u
                        result = 1
                u = parent[u]
            u = second
            while u != join:
                if pred_dir[u] == DOWN:
                    d = flow[pred[u]]
                    if d <= delta:
                        delta = d
                        u_out = u
                        result = 2
                u = parent[u]
            if result == 0:
                status = INFEASIBLE
                break
            if result == 1:
                u_in = first
                v_in = second
            else:
                u_in = second
                v_in = first

            if delta > 0:
                flow[in_arc] += delta
                u = src[in_arc]
                while u != join:
                    flow[pred[u]] -= pred_dir[u] * delta
                    u = parent[u]
                u = tgt[in_arc]
                while u != join:
                    flow[pred[u]] += pred_dir[u] * delta
                    u = parent[u]
            out_arc = pred[u_out]
            flow[out_arc] = 0.0
            state[in_arc] = TREE
            state[out_arc] = LOWER

            # cut the subtree rooted at u_out out of the thread
            sz = succ_num[u_out]
            last_s = last_succ[u_out]
            w = u_out
            for k in range(sz):
                nodes_s[k] = w
                w = thread[w]
            prev = rev_thread[u_out]
            nxt = thread[last_s]
            thread[prev] = nxt
            rev_thread[nxt] = prev
            w = parent[u_out]
            while w != -1:
                succ_num[w] -= sz
                if last_succ[w] == last_s:
                    last_succ[w] = prev
                w = parent[w]

            # reverse the stem u_in .. u_out and hang it below v_in
            w = u_in
            p_arc = in_arc
            new_par = v_in
            new_dir = UP if src[in_arc] == u_in else DOWN
            while True:
                old_par = parent[w]
                old_pred = pred[w]
                old_dir = pred_dir[w]
                parent[w] = new_par
                pred[w] = p_arc
                pred_dir[w] = new_dir
                if w == u_out:
                    break
                new_par = w
                p_arc = old_pred
                new_dir = -old_dir
                w = old_par

            # preorder of the re-rooted subtree
            for k in range(sz):
                w = nodes_s[k]
                if w != u_in:
                    p = parent[w]
                    sibling[w] = child_head[p]
                    child_head[p] = w
            top = 0
            stack[0] = u_in
            n_ord = 0
            while top >= 0:
                w = stack[top]
                top -= 1
                order[n_ord] = w
                n_ord += 1
                c_ = child_head[w]
                while c_ != -1:
                    top += 1
                    stack[top] = c_
                    c_ = sibling[c_]
            for k in range(sz):
                w = nodes_s[k]
                child_head[w] = -1
                sibling[w] = -1
                succ_num[w] = 1
            for k in range(sz - 1, 0, -1):
                w = order[k]
                succ_num[parent[w]] += succ_num[w]
            for k in range(sz):
                w = order[k]
                last_succ[w] = order[k + succ_num[w] - 1]
                if k + 1 < sz:
                    thread[w] = order[k + 1]
                    rev_thread[order[k + 1]] = w
            last_new = order[sz - 1]
            after = thread[v_in]
            thread[v_in] = u_in
            rev_thread[u_in] = v_in
            thread[last_new] = after
            rev_thread[after] = last_new
            w = v_in
            while w != -1:
                succ_num[w] += sz
                if last_succ[w] == v_in:
                    last_succ[w] = last_new
                w = parent[w]

            sigma = pi[v_in] - pred_dir[u_in] * cost[in_arc] - pi[u_in]
            for k in range(sz):
                pi[nodes_s[k]] += sigma
            n_pivots += 1

        if status != OPTIMAL:
            break
        # fresh potentials remove drift; keep pivoting if pricing now fails
        _potentials_from_tree(root, thread, parent, pred, pred_dir, cost, pi)
        clean = True
        for e in range(first_real, n_total):
            if state[e] == LOWER and cost[e] + pi[src[e]] - pi[tgt[e]] < -eps:
                clean = False
                break
        if clean:
            break
    return status, n_pivots, next_arc


class NetworkSimplex:
    """Min-cost flow on an uncapacitated network with balanced supplies.

    Arcs may be appended with :meth:`add_arcs` after a solve; the next
    :meth:`solve` continues from the current optimal basis.
    """

    def __init__(self, supply, capacity_hint=0):
        supply = np.ascontiguousarray(supply, dtype=np.float64)
        self.n_nodes = n = supply.shape[0]
        self.supply = supply
        self.n_total = n
        self.n_pivots = 0
        self._next_arc = 0
        self._max_cost = 0.0
        self._initialized = False
        cap = n + max(int(capacity_hint), 16)
        self.src = np.empty(cap, np.int64)
        self.tgt = np.empty(cap, np.int64)
        self.cost = np.empty(cap, np.float64)
        self.flow = np.zeros(cap, np.float64)
        self.state = np.empty(cap, np.int8)
        self.parent = np.empty(n + 1, np.int64)
        self.pred = np.empty(n + 1, np.int64)
        self.pred_dir = np.empty(n + 1, np.int64)
        self.thread = np.empty(n + 1, np.int64)
        self.rev_thread = np.empty(n + 1, np.int64)
        self.succ_num = np.empty(n + 1, np.int64)
        self.last_succ = np.empty(n + 1, np.int64)
        self.pi = np.zeros(n + 1, np.float64)
        self._scratch = [np.full(n + 1, -1, np.int64), np.full(n + 1, -1, np.int64),
                         np.empty(n + 1, np.int64), np.empty(n + 1, np.int64),
                         np.empty(n + 1, np.int64)]

    def _grow(self, need):
        cap = self.src.shape[0]
        if need <= cap:
            return
        new_cap = max(need, 2 * cap)
        for name in ("src", "tgt", "cost", "flow", "state"):
            old = getattr(self, name)
            arr = np.zeros(new_cap, old.dtype)
            arr[:self.n_total] = old[:self.n_total]
            setattr(self, name, arr)

    def add_arcs(self, src, tgt, cost):
        src = np.asarray(src, np.int64)
        tgt = np.asarray(tgt, np.int64)
        cost = np.asarray(cost, np.float64)
        if src.size == 0:
            return
        if self._initialized and cost.size and np.abs(cost).max() > self._max_cost:
            # the artificial cost was sized from earlier arcs; keep it dominant
            raise ValueError("appended arc cost exceeds the initial cost scale")
        k = src.shape[0]
        self._grow(self.n_total + k)
        s = slice(self.n_total, self.n_total + k)
        self.src[s] = src
        self.tgt[s] = tgt
        self.cost[s] = cost
        self.flow[s] = 0.0
        self.state[s] = LOWER
        self.n_total += k

    def solve(self, max_iter=10**9, cost_scale=None):
        n = self.n_nodes
        if not self._initialized:
            real = self.cost[n:self.n_total]
            max_cost = float(np.abs(real).max()) if real.size else 0.0
            if cost_scale is not None:
                max_cost = max(max_cost, float(cost_scale))
            self._max_cost = max_cost
            art = (max_cost + 1.0) * (n + 1)
            _init_tree(n, self.supply, self.src, self.tgt, self.cost, self.flow,
                       self.state, self.parent, self.pred, self.pred_dir,
                       self.thread, self.rev_thread, self.succ_num,
                       self.last_succ, self.pi, art)
            self._initialized = True
        eps = 1e-13 * (self._max_cost + 1.0)
        status, piv, self._next_arc = _pivot_loop(
            n, self.n_total, self.src, self.tgt, self.cost, self.flow,
            self.state, self.parent, self.pred, self.pred_dir, self.thread,
            self.rev_thread, self.succ_num, self.last_succ, self.pi,
            *self._scratch, eps, max_iter, self._next_arc)
        self.n_pivots += piv
        if status == OPTIMAL and self.artificial_flow() > 1e-12 * (1.0 + np.abs(self.supply).sum()):
            status = INFEASIBLE
        return status

    def artificial_flow(self):
        n = self.n_nodes
        in_tree = self.pred[:n] < n
        return float(self.flow[self.pred[:n][in_tree]].sum())

    @property
    def arc_flow(self):
        return self.flow[self.n_nodes:self.n_total]

    @property
    def potentials(self):
        return self.pi[:self.n_nodes]

    def arcs(self):
        n = self.n_nodes
        return self.src[n:self.n_total], self.tgt[n:self.n_total], self.cost[n:self.n_total]
