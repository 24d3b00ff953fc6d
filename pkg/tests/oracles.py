"""Slow, direct reference implementations used only by the tests."""

import math

import numpy as np
from scipy import integrate, optimize


def naive_prim(w, start=0):
    """Textbook O(n^2) Prim on a dense matrix: (order, via, weight), weight[0] = nan."""
    n = w.shape[0]
    inside = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    src = np.full(n, -1)
    order, via, weight = [], [], []
    cur, cw, cv = start, np.nan, -1
    for _ in range(n):
        inside[cur] = True
        order.append(cur), via.append(cv), weight.append(cw)
        row = w[cur]
        upd = (~inside) & (row < best)
        best[upd], src[upd] = row[upd], cur
        cand = np.where(inside, np.inf, best)
        nxt = int(np.argmin(cand))
        if not np.isfinite(cand[nxt]):
            break
        cur, cw, cv = nxt, cand[nxt], src[nxt]
    return np.array(order), np.array(via), np.array(weight)


def dense_matrix(graph):
    i, j, wt = graph.edge_list()
    w = np.full((graph.n, graph.n), np.inf)
    w[i, j] = wt
    w[j, i] = wt
    return w


def brute_hybrid(w, z, lam, k):
    """(g, d, forest edge set, vertex set of the hybrid tree or None)."""
    n = w.shape[0]
    order, via, weight = naive_prim(w)
    heavy = [l for l in range(1, n) if weight[l] >= z]
    g = max([l for l in heavy if l <= k], default=0)
    d = min([l for l in heavy if l > k], default=n)
    mst = {frozenset((int(order[l]), int(via[l]))): weight[l] for l in range(1, n)}
    first_d = {frozenset((int(order[l]), int(via[l]))) for l in range(1, d)}
    forest = {e for e, x in mst.items() if e in first_d or x <= lam}
    if g == 0:
        return g, d, forest, None
    blocked = set(int(v) for v in order[g:d])
    adj = {v: [] for v in range(n)}
    for e in forest:
        a, b = tuple(e)
        adj[a].append(b), adj[b].append(a)
    seen, stack = {0}, [0]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in seen and y not in blocked:
                seen.add(y)
                stack.append(y)
    return g, d, forest, seen


def theta_oracle(x):
    """Survival probability of a Poisson(x) Galton-Watson tree by bracketing root finding."""
    if x <= 1:
        return 0.0
    return optimize.brentq(lambda t: -math.expm1(-x * t) - t, 1e-12, 1.0, xtol=1e-17, rtol=1e-15)


def rate_oracle(x):
    q = 1.0 - theta_oracle(x)
    return q / (1.0 - x * q)


def nested_nk(lam, nu, k):
    """k-fold ordered integral of rate_oracle over lam < x_1 < ... < x_k < nu (k <= 3)."""
    hi = min(nu, 40.0)
    if k == 1:
        return integrate.quad(rate_oracle, lam, hi, epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    if k == 2:
        return integrate.dblquad(
            lambda y, x: rate_oracle(x) * rate_oracle(y), lam, hi, lambda x: x, lambda x: hi,
            epsabs=1e-12, epsrel=1e-10,
        )[0]
    if k == 3:
        return integrate.tplquad(
            lambda w, y, x: rate_oracle(x) * rate_oracle(y) * rate_oracle(w),
            lam, hi, lambda x: x, lambda x: hi, lambda x, y: y, lambda x, y: hi,
            epsabs=1e-11, epsrel=1e-9,
        )[0]
    raise ValueError("k must be 1, 2 or 3")
