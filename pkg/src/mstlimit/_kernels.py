"""Compiled inner loops.

Everything here is sequential by nature (queues, heaps, branching recursions).
Random draws go through a numpy ``Generator`` handed in by the caller, so results
are reproducible from the caller's seed.
"""

from __future__ import annotations

import heapq
import math

import numba
import numpy as np

_jit = numba.njit(cache=True, nogil=True)


@_jit
def prufer_decode(seq, m):
    """Linear-time Prufer decoding on labels 0..m-1; returns an (m-1, 2) edge array."""
    edges = np.empty((max(m - 1, 0), 2), dtype=np.int64)
    if m < 2:
        return edges
    degree = np.ones(m, dtype=np.int64)
    for x in seq:
        degree[x] += 1
    ptr = 0
    while degree[ptr] != 1:
        ptr += 1
    leaf = ptr
    for i in range(m - 2):
        v = seq[i]
        edges[i, 0] = leaf
        edges[i, 1] = v
        degree[v] -= 1
        if degree[v] == 1 and v < ptr:
            leaf = v
        else:
            ptr += 1
            while degree[ptr] != 1:
                ptr += 1
            leaf = ptr
    edges[m - 2, 0] = leaf
    edges[m - 2, 1] = m - 1
    return edges


@_jit
def bfs_distances(indptr, indices, source, rmax):
    """Hop distances from ``source``; vertices farther than ``rmax`` get -1."""
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        if dist[v] >= rmax:
            continue
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue[tail] = u
                tail += 1
    return dist


@_jit
def bfs_tree(indptr, indices, data, root):
    """BFS from ``root`` over a CSR tree: order, parent, parent-edge payload, depth."""
    n = indptr.shape[0] - 1
    parent = np.full(n, -1, dtype=np.int64)
    payload = np.full(n, -1, dtype=np.int64)
    depth = np.full(n, -1, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    depth[root] = 0
    order[0] = root
    head = 0
    tail = 1
    while head < tail:
        v = order[head]
        head += 1
        for p in range(indptr[v], indptr[v + 1]):
            u = indices[p]
            if depth[u] < 0:
                depth[u] = depth[v] + 1
                parent[u] = v
                payload[u] = data[p]
                order[tail] = u
                tail += 1
    return order[:tail], parent, payload, depth


@_jit
def forest_progeny(rng, mu, roots):
    """Total size of a Poisson(mu) Galton-Watson forest started from ``roots`` trees."""
    total = 0
    z = roots
    while z > 0:
        total += z
        z = rng.poisson(mu * z)
    return total


@_jit
def borel_tanner_draws(rng, lam, size):
    out = np.empty(size, dtype=np.int64)
    for i in range(size):
        out[i] = forest_progeny(rng, lam, 1)
    return out


@_jit
def size_biased_draws(rng, gap):
    """Draw |T| under the size-biased subcritical Poisson law with mean offspring 1 - gap.

    A uniformly marked vertex sits at the end of a spine of geometric length;
    every spine vertex carries an independent Poisson(mu) number of ordinary
    subtrees besides the spine child.
    """
    out = np.empty(gap.shape[0], dtype=np.int64)
    for i in range(gap.shape[0]):
        g = gap[i]
        mu = 1.0 - g
        spine = rng.geometric(g)  # spine length plus one
        hanging = rng.poisson(mu * spine)
        out[i] = spine + forest_progeny(rng, mu, hanging)
    return out


@_jit
def _offspring_given_budget(rng, q, s):
    """Children of the next vertex of a critical Poisson forest conditioned on its size.

    ``q`` trees remain to be explored and together hold exactly ``s`` vertices.
    """
    if s == 1 or s == q:
        return 0
    sf = float(s)
    qf = float(q)
    base = math.log(sf / (sf - 1.0)) + (sf - qf) * math.log1p(-1.0 / sf)
    if q == 1:
        k = 1
        logp = base - math.log(sf - 1.0) + math.log(sf - qf)
    else:
        k = 0
        logp = base + math.log((qf - 1.0) / qf)
    p = math.exp(logp)
    cum = p
    u = rng.random()
    kmax = s - q
    while cum < u and k < kmax and p > 0.0:
        kf = float(k)
        p *= (qf + kf) * (sf - qf - kf) / ((kf + 1.0) * (qf - 1.0 + kf) * (sf - 1.0))
        k += 1
        cum += p
    return k


@_jit
def conditioned_tree_ball(rng, size, radius):
    """Radius-``radius`` ball around the root of a uniform random tree on ``size`` vertices.

    The tree is explored breadth-first as a Poisson(1) Galton-Watson tree
    conditioned to have ``size`` vertices; only the ball is materialised.
    Returns parent and depth arrays in BFS order (vertex 0 is the root).
    """
    cap = 64
    parent = np.empty(cap, dtype=np.int64)
    depth = np.empty(cap, dtype=np.int64)
    parent[0] = -1
    depth[0] = 0
    count = 1
    head = 0
    q = 1
    s = size
    while head < count:
        if depth[head] >= radius:
            break
        k = _offspring_given_budget(rng, q, s)
        if count + k > cap:
            while count + k > cap:
                cap *= 2
            parent = np.concatenate((parent, np.empty(cap - parent.shape[0], dtype=np.int64)))
            depth = np.concatenate((depth, np.empty(cap - depth.shape[0], dtype=np.int64)))
        for j in range(k):
            parent[count + j] = head
            depth[count + j] = depth[head] + 1
        count += k
        q += k - 1
        s -= 1
        head += 1
    return parent[:count].copy(), depth[:count].copy()


@_jit
def pwit_invasion(k, exps):
    """Prim's algorithm from the root of a lazily generated Poisson weighted infinite tree.

    ``exps`` holds 2k-1 standard exponentials, consumed in a fixed order: the
    root's first atom, then per step the source's next gap and the new vertex's
    first atom.
    """
    parent = np.full(k, -1, dtype=np.int64)
    weight = np.full(k, np.nan)
    heap = [(exps[0], 0, 0)]
    counter = 1
    used = 1
    for step in range(1, k):
        w, _, src = heapq.heappop(heap)
        parent[step] = src
        weight[step] = w
        heapq.heappush(heap, (w + exps[used], counter, src))
        counter += 1
        used += 1
        heapq.heappush(heap, (exps[used], counter, step))
        counter += 1
        used += 1
    return parent, weight


@_jit
def _mix64(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@_jit
def _keyed(s, a, b, tag):
    key = (np.uint64(a) << np.uint64(32)) | np.uint64(b)
    x = _mix64(_mix64(s ^ key) ^ (s + np.uint64(tag)))
    return (float(x >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)


@_jit
def _seed_state(seed):
    return _mix64(_mix64(np.uint64(seed)))


@_jit
def keyed_uniform(seed, lo, hi, tag=0):
    """Counter-based uniforms in (0, 1) keyed by (seed, lo[i], hi[i], tag); splitmix64 mixing."""
    n = lo.shape[0]
    out = np.empty(n)
    s = _seed_state(seed)
    for i in range(n):
        out[i] = _keyed(s, lo[i], hi[i], tag)
    return out


@_jit
def light_pairs(seed, n, p, scale):
    """Pairs i < j with keyed weight below the light cutoff, by geometric skips along each row.

    Row i draws its skips from the keyed stream (i, counter) with tag 1 and the
    truncated-exponential weight of pair (i, j) from key (i, j) with tag 2, so
    the output depends only on (seed, n, p).
    """
    s = _seed_state(seed)
    logq = math.log1p(-p)
    mean = 0.5 * n * (n - 1) * p
    cap = int(mean + 10.0 * math.sqrt(mean) + 64)
    while True:
        li = np.empty(cap, dtype=np.int64)
        lj = np.empty(cap, dtype=np.int64)
        lw = np.empty(cap)
        total = 0
        for i in range(n - 1):
            j = i
            c = 0
            while True:
                u = _keyed(s, i, c, 1)
                c += 1
                j += 1 + int(math.floor(math.log(u) / logq))
                if j >= n:
                    break
                if total < cap:
                    li[total] = i
                    lj[total] = j
                    lw[total] = -scale * math.log1p(-_keyed(s, i, j, 2) * p)
                total += 1
        if total <= cap:
            return li[:total], lj[:total], lw[:total]
        cap = total


@_jit
def implicit_row(seed, n, v, cutoff, scale, indptr, indices, data):
    """All weights W(v, u); heavy pairs are cutoff + Exp(scale), light ones come from the CSR."""
    s = _seed_state(seed)
    out = np.empty(n)
    for u in range(n):
        if u < v:
            out[u] = cutoff - scale * math.log(_keyed(s, u, v, 0))
        elif u > v:
            out[u] = cutoff - scale * math.log(_keyed(s, v, u, 0))
        else:
            out[u] = np.inf
    for t in range(indptr[v], indptr[v + 1]):
        out[indices[t]] = data[t]
    return out


@_jit
def tree_prim_order(indptr, indices, data, start):
    """Order in which Prim's algorithm from ``start`` adds the vertices of a weighted tree.

    Returns (order, via, weight): ``via[i]`` is the tree neighbour through which
    order[i] was reached and ``weight[i]`` the weight of that edge.
    """
    n = indptr.shape[0] - 1
    order = np.empty(n, dtype=np.int64)
    via = np.full(n, -1, dtype=np.int64)
    weight = np.full(n, np.nan)
    seen = np.zeros(n, dtype=np.bool_)
    heap = [(0.0, start, -1)]
    heap.pop()
    order[0] = start
    seen[start] = True
    for t in range(indptr[start], indptr[start + 1]):
        heapq.heappush(heap, (data[t], indices[t], start))
    k = 1
    while len(heap) > 0:
        w, v, src = heapq.heappop(heap)
        order[k] = v
        via[k] = src
        weight[k] = w
        seen[v] = True
        k += 1
        for t in range(indptr[v], indptr[v + 1]):
            x = indices[t]
            if not seen[x]:
                heapq.heappush(heap, (data[t], x, v))
    return order[:k], via[:k], weight[:k]


@_jit
def dense_prim(seed, n, start, steps, cutoff, scale, indptr, indices, data):
    """Dense Prim with a best-crossing array over implicit weights; ``steps`` vertices."""
    best = implicit_row(seed, n, start, cutoff, scale, indptr, indices, data)
    src = np.full(n, start, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    done[start] = True
    best[start] = np.inf
    order = np.empty(steps, dtype=np.int64)
    via = np.full(steps, -1, dtype=np.int64)
    weight = np.full(steps, np.nan)
    order[0] = start
    for k in range(1, steps):
        v = -1
        bw = np.inf
        for u in range(n):
            if not done[u] and best[u] < bw:
                bw = best[u]
                v = u
        order[k] = v
        via[k] = src[v]
        weight[k] = bw
        done[v] = True
        best[v] = np.inf
        row = implicit_row(seed, n, v, cutoff, scale, indptr, indices, data)
        for u in range(n):
            if not done[u] and row[u] < best[u]:
                best[u] = row[u]
                src[u] = v
    return order, via, weight


@_jit
def _find(root_of, x):
    while root_of[x] != x:
        root_of[x] = root_of[root_of[x]]
        x = root_of[x]
    return x


@_jit
def kruskal(n, ei, ej, order):
    """Minimum spanning forest by Kruskal with union-find over edges taken in ``order``.

    Returns the chosen edge indices.
    """
    root_of = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    chosen = np.empty(n - 1, dtype=np.int64)
    k = 0
    for t in order:
        a = _find(root_of, ei[t])
        b = _find(root_of, ej[t])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        root_of[b] = a
        size[a] += size[b]
        chosen[k] = t
        k += 1
        if k == n - 1:
            break
    return chosen[:k]
