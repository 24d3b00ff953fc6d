"""Uniform random labelled trees, their degree and distance laws, and tree metrics."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from . import _kernels
from .trees import RootedWeightedTree


@dataclass(frozen=True)
class LabelledTree:
    """A tree on labels ``1..m`` given by its m-1 edges."""

    m: int
    edges: np.ndarray

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("a tree needs at least one vertex")
        if self.edges.shape != (self.m - 1, 2):
            raise ValueError("a tree on m vertices has m-1 edges")

    def key(self) -> frozenset:
        """Hashable identity of the labelled tree (order of edges ignored)."""
        return frozenset(tuple(sorted(map(int, e))) for e in self.edges)

    def rooted(self, root_label: int = 1, weights=None) -> RootedWeightedTree:
        """Rooted copy on vertex ids ``0..m-1`` (label ``l`` becomes id ``l-1``)."""
        w = np.ones(self.m - 1) if weights is None else np.asarray(weights, dtype=float)
        return RootedWeightedTree.from_edges(self.m, self.edges - 1, w, root_label - 1)


def prufer_decode(seq, m: int) -> LabelledTree:
    """Tree on labels 1..m encoded by a Prufer sequence over 1..m of length m-2."""
    seq = np.asarray(seq, dtype=np.int64)
    if m < 1 or seq.shape != (max(m - 2, 0),):
        raise ValueError("a Prufer sequence for m vertices has length m-2")
    if m == 1:
        return LabelledTree(1, np.zeros((0, 2), dtype=np.int64))
    if np.any((seq < 1) | (seq > m)):
        raise ValueError("Prufer entries must be labels in 1..m")
    return LabelledTree(m, _kernels.prufer_decode(seq - 1, m) + 1)


def prufer_encode(tree: LabelledTree) -> np.ndarray:
    """Prufer sequence of a labelled tree: repeatedly strip the smallest leaf."""
    m = tree.m
    if m <= 2:
        return np.zeros(0, dtype=np.int64)
    adj = [set() for _ in range(m + 1)]
    for a, b in tree.edges:
        adj[a].add(b)
        adj[b].add(a)
    leaves = [v for v in range(1, m + 1) if len(adj[v]) == 1]
    heapq.heapify(leaves)
    seq = []
    for _ in range(m - 2):
        leaf = heapq.heappop(leaves)
        (nb,) = adj[leaf]
        seq.append(nb)
        adj[nb].discard(leaf)
        if len(adj[nb]) == 1:
            heapq.heappush(leaves, nb)
    return np.array(seq, dtype=np.int64)


def uniform_labelled_tree(m: int, rng: np.random.Generator) -> LabelledTree:
    """Uniform draw from the m^(m-2) labelled trees on 1..m."""
    if m < 1:
        raise ValueError("m must be at least 1")
    seq = rng.integers(1, m + 1, size=max(m - 2, 0))
    return prufer_decode(seq, m)


def root_degree_pmf(m: int, k):
    """P(deg(v) = k) for a fixed vertex v of a uniform labelled tree on m vertices.

    The degree is 1 + Binomial(m-2, 1/m): each Prufer entry names v with
    probability 1/m.  Values of k outside 1..m-1 get probability 0.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    k = np.asarray(k)
    out = np.where((k >= 1) & (k <= m - 1), binom.pmf(k - 1, m - 2, 1.0 / m), 0.0)
    return float(out) if out.ndim == 0 else out


def distance_tail(m: int, k):
    """P(d(v1, v2) >= k) for independent uniform vertices of a uniform tree on m vertices."""
    if m < 2:
        raise ValueError("m must be at least 2")
    k = np.asarray(k)
    j = np.arange(1, m + 1)
    cum = np.concatenate(([1.0], np.cumprod((m - j) / m)))
    out = np.where(k >= m, 0.0, cum[np.clip(k, 0, m)])
    return float(out) if out.ndim == 0 else out


def bfs_ball(tree: RootedWeightedTree, center: int, r: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertices within hop distance ``r`` of ``center`` and their distances, nearest first."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    dist = tree.distances_from(center, r)
    inside = np.flatnonzero(dist >= 0)
    order = np.argsort(dist[inside], kind="stable")
    return inside[order], dist[inside][order]


def ball_profile(tree: RootedWeightedTree, center: int, r_max: int) -> np.ndarray:
    """``|B(center, r)|`` for r = 0..r_max."""
    dist = tree.distances_from(center, r_max)
    counts = np.bincount(dist[dist >= 0], minlength=r_max + 1)
    return np.cumsum(counts[: r_max + 1])


def diameter(tree: RootedWeightedTree) -> int:
    """Hop diameter by double breadth-first search."""
    d0 = tree.distances_from(tree.root)
    far = int(np.argmax(d0))
    return int(tree.distances_from(far).max())
