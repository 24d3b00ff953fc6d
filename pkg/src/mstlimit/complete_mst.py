"""Minimum spanning trees of the complete graph with iid Exponential(mean n-1) weights.

Weights are never stored.  A pair is *light* when its weight is at most a
cutoff ``L = log n + margin``; light pairs are found by keyed geometric skips
along each row and carry truncated-exponential weights, every other pair gets
``L + Exp(mean n-1)`` from a counter-based hash of ``(seed, i, j)``.  By the
memoryless property this is exactly an iid exponential weight per pair, and any
single weight can be re-derived on demand.

Vertex ids are 0-based; id 0 plays the role of the label 1.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from . import _kernels
from .trees import RootedWeightedTree

_SEED_MASK = (1 << 63) - 1


class ImplicitCompleteGraph:
    """K_n with lazily evaluated, reproducible edge weights."""

    def __init__(self, n: int, seed: int, margin: float = 5.0):
        if n < 2:
            raise ValueError("n must be at least 2")
        if n >= 2**31:
            raise ValueError("n must fit in 31 bits")
        self.n = int(n)
        self.seed = int(seed) & _SEED_MASK
        self.scale = float(n - 1)
        self.cutoff = math.log(n) + margin
        p = -math.expm1(-self.cutoff / self.scale)
        li, lj, lw = _kernels.light_pairs(np.uint64(self.seed), self.n, p, self.scale)
        self._set_light(li, lj, lw)

    @classmethod
    def from_matrix(cls, weights) -> "ImplicitCompleteGraph":
        """Explicit symmetric weight matrix (diagonal ignored), mainly for tests."""
        w = np.asarray(weights, dtype=float)
        n = w.shape[0]
        if w.shape != (n, n) or n < 2:
            raise ValueError("need a square matrix of size at least 2")
        if not np.array_equal(w, w.T):
            raise ValueError("weight matrix must be symmetric")
        g = cls.__new__(cls)
        g.n, g.seed, g.scale, g.cutoff = n, 0, 1.0, math.inf
        li, lj = np.triu_indices(n, 1)
        if np.any(w[li, lj] <= 0) or not np.all(np.isfinite(w[li, lj])):
            raise ValueError("weights must be positive and finite")
        g._set_light(li.astype(np.int64), lj.astype(np.int64), w[li, lj])
        return g

    def _set_light(self, li, lj, lw):
        self.light_i, self.light_j, self.light_w = li, lj, lw
        key = li * self.n + lj
        if key.size > 1 and not np.all(key[1:] > key[:-1]):
            order = np.argsort(key)
            key, lw = key[order], lw[order]
        self._light_key, self._light_sorted_w = key, lw

    @cached_property
    def _adj(self) -> sparse.csr_array:
        li, lj, lw = self.light_i, self.light_j, self.light_w
        a = sparse.csr_array(
            (np.concatenate((lw, lw)), (np.concatenate((li, lj)), np.concatenate((lj, li)))),
            shape=(self.n, self.n),
        )
        a.sort_indices()
        return a

    @cached_property
    def _adj_args(self):
        a = self._adj
        return a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data.astype(np.float64)

    @property
    def light_count(self) -> int:
        return int(self.light_i.shape[0])

    def weight(self, i, j):
        """W(i, j) for scalars or broadcastable arrays of distinct vertices."""
        i, j = np.broadcast_arrays(np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64))
        if np.any(i == j):
            raise ValueError("no loops in K_n")
        if np.any((i < 0) | (i >= self.n) | (j < 0) | (j >= self.n)):
            raise ValueError("vertex outside 0..n-1")
        lo, hi = np.minimum(i, j).ravel(), np.maximum(i, j).ravel()
        key = lo * self.n + hi
        pos = np.minimum(np.searchsorted(self._light_key, key), self._light_key.size - 1)
        hit = self._light_key[pos] == key if self._light_key.size else np.zeros(key.shape, dtype=bool)
        out = np.empty(key.shape)
        out[hit] = self._light_sorted_w[pos[hit]]
        miss = ~hit
        if np.any(miss):
            u = _kernels.keyed_uniform(np.uint64(self.seed), lo[miss], hi[miss])
            out[miss] = self.cutoff - self.scale * np.log(u)
        out = out.reshape(i.shape)
        return float(out) if out.ndim == 0 else out

    def row(self, v: int) -> np.ndarray:
        """W(v, u) for every u, with +inf at u = v."""
        if not 0 <= v < self.n:
            raise ValueError("vertex outside 0..n-1")
        return _kernels.implicit_row(
            np.uint64(self.seed), self.n, int(v), self.cutoff, self.scale, *self._adj_args
        )

    def edge_list(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All n(n-1)/2 pairs (i < j) with weights; quadratic, for small n."""
        i, j = np.triu_indices(self.n, 1)
        return i, j, self.weight(i, j)

    def below(self, z: float) -> sparse.csr_array:
        """Adjacency of K_n^z, the edges of weight strictly less than z."""
        if z > self.cutoff:
            raise ValueError(f"threshold {z} exceeds the light cutoff {self.cutoff:.3f}")
        a = self._adj.copy()
        a.data = np.where(a.data < z, a.data, 0.0)
        a.eliminate_zeros()
        return a


def _csr32(data, i, j, n) -> sparse.csr_matrix:
    # csgraph routines want 32-bit index arrays
    return sparse.csr_matrix((data, (i.astype(np.int32), j.astype(np.int32))), shape=(n, n))


def minimum_spanning_tree(graph: ImplicitCompleteGraph, root: int = 0) -> RootedWeightedTree:
    """Exact MST rooted at ``root``.

    Kruskal runs on the light pairs.  If they leave several components, every
    crossing edge of the MST has an endpoint outside the largest one, so adding
    the full weight rows of those vertices completes the candidate set.
    """
    n = graph.n
    ei, ej, ew = graph.light_i, graph.light_j, graph.light_w
    chosen = _kernels.kruskal(n, ei, ej, np.argsort(ew))
    ncomp = n - chosen.size
    if ncomp > 1:
        f = _csr32(np.ones(chosen.size), ei[chosen], ej[chosen], n)
        _, labels = csgraph.connected_components(f, directed=False)
        giant = np.argmax(np.bincount(labels))
        rows, cols, data = [ei[chosen]], [ej[chosen]], [ew[chosen]]
        for v in np.flatnonzero(labels != giant):
            out = np.flatnonzero(labels != labels[v])
            rows.append(np.full(out.size, v)), cols.append(out), data.append(graph.row(int(v))[out])
        r_, c_ = np.concatenate(rows), np.concatenate(cols)
        lo, hi = np.minimum(r_, c_), np.maximum(r_, c_)
        _, first = np.unique(lo * n + hi, return_index=True)
        ei, ej, ew = lo[first], hi[first], np.concatenate(data)[first]
        chosen = _kernels.kruskal(n, ei, ej, np.argsort(ew))
    edges = np.column_stack((ei[chosen], ej[chosen]))
    return RootedWeightedTree.from_edges(n, edges, ew[chosen], root, meta={"light_components": ncomp})


def _tree_csr(tree: RootedWeightedTree):
    e, w = tree.edges, tree.edge_weights
    a = sparse.csr_array(
        (np.concatenate((w, w)), (np.concatenate((e[:, 0], e[:, 1])), np.concatenate((e[:, 1], e[:, 0])))),
        shape=(tree.n, tree.n),
    )
    a.sort_indices()
    return a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data.astype(np.float64)


@dataclass
class FinitePrimRun:
    """Prim's algorithm on K_n: ``order[i]`` is v_{i+1}; e_i joins it to ``via[i]`` with weight ``weight[i]``."""

    order: np.ndarray
    via: np.ndarray
    weight: np.ndarray
    n: int

    @property
    def steps(self) -> int:
        return int(self.order.shape[0])

    @property
    def edge_weights(self) -> np.ndarray:
        """W(e_1), W(e_2), ..."""
        return self.weight[1:]

    def g(self, j: int, z: float) -> int:
        """Last l <= j with W(e_l) >= z, or 0."""
        if not 0 <= j < self.steps:
            raise ValueError("j beyond the recorded run")
        hits = np.flatnonzero(self.weight[1 : j + 1] >= z)
        return int(hits[-1]) + 1 if hits.size else 0

    def d(self, j: int, z: float) -> int:
        """First l > j with W(e_l) >= z, or n if there is none."""
        if not 0 <= j < self.n:
            raise ValueError("j outside 0..n-1")
        hits = np.flatnonzero(self.weight[j + 1 :] >= z)
        if hits.size:
            return j + 1 + int(hits[0])
        if self.steps < self.n:
            raise ValueError("run stopped before d was determined")
        return self.n

    def tree(self, k: int | None = None) -> RootedWeightedTree:
        """M_{n,k}: the first k vertices and the k-1 edges joining them, as a tree on ids 0..k-1."""
        k = self.steps if k is None else int(k)
        if not 1 <= k <= self.steps:
            raise ValueError("k outside the recorded run")
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[self.order[:k]] = np.arange(k)
        parent = np.where(self.via[:k] >= 0, pos[np.maximum(self.via[:k], 0)], -1)
        t = RootedWeightedTree(parent, self.weight[:k], 0)
        t.meta["original_ids"] = self.order[:k].copy()
        return t


def prim_mst(graph: ImplicitCompleteGraph, steps: int, z: float | None = None, start: int = 0) -> FinitePrimRun:
    """Dense Prim for ``steps`` vertices; with ``z`` it runs on until d_n(steps-1, z) is known."""
    if not 1 <= steps <= graph.n:
        raise ValueError("steps must be in 1..n")
    run = _kernels.dense_prim(np.uint64(graph.seed), graph.n, int(start), int(steps), graph.cutoff, graph.scale, *graph._adj_args)
    out = FinitePrimRun(*run, n=graph.n)
    if z is not None:
        while not np.any(out.weight[steps:] >= z) and out.steps < graph.n:
            more = min(graph.n, 2 * out.steps)
            out = FinitePrimRun(
                *_kernels.dense_prim(np.uint64(graph.seed), graph.n, int(start), more, graph.cutoff, graph.scale, *graph._adj_args),
                n=graph.n,
            )
    return out


def prim_order(mst: RootedWeightedTree, start: int = 0) -> FinitePrimRun:
    """Prim's vertex order on K_n recovered from its MST alone.

    At each step the cheapest edge leaving the explored set is an MST edge, so a
    heap over tree edges reproduces the run.
    """
    order, via, weight = _kernels.tree_prim_order(*_tree_csr(mst), int(start))
    return FinitePrimRun(order, via, weight, mst.n)


def default_k(n: int) -> int:
    """k(n) = ceil(log^5 n), capped at n - 1."""
    return int(min(math.ceil(math.log(n) ** 5), n - 1))


@dataclass
class HybridState:
    """Prim prefix up to d = d_n(k, z) together with the forest F_n^{z,lambda}."""

    run: FinitePrimRun
    mst: RootedWeightedTree
    z: float
    k: int
    g: int
    d: int
    lam: float
    labels: np.ndarray = field(repr=False)
    in_prefix: np.ndarray = field(repr=False)

    @property
    def prefix(self) -> np.ndarray:
        """Vertices v_1..v_d."""
        return self.run.order[: self.d]

    @property
    def forbidden(self) -> np.ndarray:
        """Vertices v_j with g < j <= d."""
        return self.run.order[self.g : self.d]


def hybrid_state(
    graph: ImplicitCompleteGraph, z: float, lam: float | None = None, k: int | None = None,
    mst: RootedWeightedTree | None = None,
) -> HybridState:
    lam = z if lam is None else lam
    if not z > 1:
        raise ValueError("z must exceed 1")
    if lam < z:
        raise ValueError("lambda must be at least z")
    n = graph.n
    k = default_k(n) if k is None else int(k)
    if not 1 <= k <= n - 1:
        raise ValueError("k must be in 1..n-1")
    mst = minimum_spanning_tree(graph) if mst is None else mst
    run = prim_order(mst)
    g, d = run.g(k, z), run.d(k, z)
    pos = np.empty(n, dtype=np.int64)
    pos[run.order] = np.arange(n)
    e, w = mst.edges, mst.edge_weights
    # e_l for l < d joins v_{l+1} to an earlier vertex, so the later endpoint sits at position <= d-1
    in_md = np.maximum(pos[e[:, 0]], pos[e[:, 1]]) <= d - 1
    keep = in_md | (w <= lam)
    f = _csr32(np.ones(int(keep.sum())), e[keep, 0], e[keep, 1], n)
    _, labels = csgraph.connected_components(f, directed=False)
    in_prefix = np.zeros(n, dtype=bool)
    in_prefix[run.order[:d]] = True
    return HybridState(run, mst, float(z), k, g, d, float(lam), labels, in_prefix)


def forest_edges(state: HybridState) -> np.ndarray:
    """Edges of F_n^{z,lambda} as sorted (i, j) pairs with i < j."""
    e, w = state.mst.edges, state.mst.edge_weights
    pos = np.empty(state.mst.n, dtype=np.int64)
    pos[state.run.order] = np.arange(state.mst.n)
    keep = (np.maximum(pos[e[:, 0]], pos[e[:, 1]]) <= state.d - 1) | (w <= state.lam)
    out = np.sort(e[keep], axis=1)
    return out[np.lexsort((out[:, 1], out[:, 0]))]


def hybrid_construct(
    graph: ImplicitCompleteGraph, z: float, lam: float, k: int | None = None,
    mst: RootedWeightedTree | None = None,
) -> RootedWeightedTree | None:
    """M_n^{z,lambda}: vertices joined to v_1 in F_n^{z,lambda} by a path avoiding v_{g+1}..v_d.

    Returns None when g = 0, where v_1 itself is excluded.  ``meta`` carries the
    :class:`HybridState` and the original vertex ids.
    """
    state = hybrid_state(graph, z, lam, k, mst)
    if state.g == 0:
        return None
    blocked = np.zeros(graph.n, dtype=bool)
    blocked[state.forbidden] = True
    tree = state.mst if state.mst.root == 0 else state.mst.reroot(0)
    par = tree.parent
    pos = np.empty(graph.n, dtype=np.int64)
    pos[state.run.order] = np.arange(graph.n)
    child = np.arange(graph.n)
    in_f = (np.maximum(pos[child], pos[np.maximum(par, 0)]) <= state.d - 1) | (tree.weight <= state.lam)
    ok = ~blocked & in_f
    good = np.zeros(graph.n, dtype=bool)
    good[0] = not blocked[0]
    for v in np.argsort(tree.depth, kind="stable")[1:]:
        good[v] = good[par[v]] and ok[v]
    out = tree.subtree(good)
    out.meta["state"] = state
    return out


@dataclass
class ZPrimResult:
    """Output of z-Prim(u): the explored tree, the contact vertex and the summary statistics."""

    tree: RootedWeightedTree
    alpha: int
    tau: int
    lam: int
    m: int
    component_sizes: list


def _tree_diameter(adj: dict) -> int:
    def far(s):
        dist = {s: 0}
        q = deque([s])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    q.append(y)
        v = max(dist, key=dist.get)
        return v, dist[v]

    a, _ = far(next(iter(adj)))
    return far(a)[1]


def z_prim(graph: ImplicitCompleteGraph, u: int, state: HybridState, below=None) -> ZPrimResult:
    """Explore from u: breadth-first below z inside each component of K_n^z, then jump along the
    cheapest edge leaving everything explored so far, until a vertex of v_1..v_d is reached.

    tau is the vertex count of the explored tree (1 + total component sizes) and
    lam = m + sum of the BFS-tree diameters.  ``below`` may pass a cached
    :meth:`ImplicitCompleteGraph.below` adjacency.
    """
    if not 0 <= u < graph.n:
        raise ValueError("vertex outside 0..n-1")
    if state.in_prefix[u]:
        raise ValueError("u lies in the Prim prefix")
    a = graph.below(state.z) if below is None else below
    indptr, indices = a.indptr, a.indices
    n = graph.n
    explored = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    src = np.full(n, -1, dtype=np.int64)
    edges, weights, sizes, diams = [], [], [], []
    current = int(u)
    while True:
        explored[current] = True
        queue, adj = [current], {current: []}
        head = 0
        while head < len(queue):
            x = queue[head]
            head += 1
            for t in range(indptr[x], indptr[x + 1]):
                y = int(indices[t])
                if not explored[y]:
                    explored[y] = True
                    queue.append(y)
                    adj[x].append(y)
                    adj[y] = [x]
                    edges.append((x, y)), weights.append(float(a.data[t]))
        sizes.append(len(queue))
        diams.append(_tree_diameter(adj))
        for x in queue:
            r = graph.row(x)
            better = r < best
            best[better] = r[better]
            src[better] = x
        best[explored] = np.inf
        nxt = int(np.argmin(best))
        edges.append((int(src[nxt]), nxt)), weights.append(float(best[nxt]))
        if state.in_prefix[nxt]:
            break
        current = nxt
    verts = np.unique(np.array(edges).ravel())
    local = {int(v): i for i, v in enumerate(verts)}
    tree = RootedWeightedTree.from_edges(
        verts.size, [(local[x], local[y]) for x, y in edges], weights, local[int(u)],
        meta={"original_ids": verts},
    )
    m = len(sizes)
    return ZPrimResult(tree, nxt, 1 + sum(sizes), m + sum(diams), m, sizes)


@dataclass
class BallStats:
    profile: np.ndarray
    degree: int
    incident_weight: float


def ball_and_degree_stats(mst: RootedWeightedTree, root: int = 0, r_max: int = 0) -> BallStats:
    """|B(root, r)| for r <= r_max, the root degree and the total weight of edges at the root."""
    from .random_trees import ball_profile

    return BallStats(ball_profile(mst, root, r_max), mst.degree(root), mst.incident_weight(root))
