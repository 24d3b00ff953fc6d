"""Invasion percolation on the Poisson weighted infinite tree and its invasion cluster.

The cluster T is assembled from its forward-maximal edges: a decreasing Markov
chain of weights X_1 > X_2 > ... > 1, with a uniform random tree P_i of size
Z_i ~ B_{X_i} hanging between consecutive forward-maximal edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .pgw_core import b_lambda_sample_from_theta, dual_gap_from_theta, theta_inverse, _size_biased
from .random_trees import uniform_labelled_tree
from .trees import RootedWeightedTree


def open_uniform(rng: np.random.Generator, size=None):
    """Uniforms on the open interval (0, 1)."""
    u = rng.random(size)
    return np.where(u > 0, u, 2.0**-54) if size is not None else (u if u > 0 else 2.0**-54)


@dataclass
class PrimRun:
    """The first k vertices added by Prim's algorithm from the root.

    Vertex ``i`` is the (i+1)-th vertex added, so ``weight[i]`` (i >= 1) is the
    weight of the i-th edge e_i and ``parent[i]`` its other endpoint.
    """

    parent: np.ndarray
    weight: np.ndarray

    @property
    def k(self) -> int:
        return int(self.parent.shape[0])

    @property
    def edge_weights(self) -> np.ndarray:
        return self.weight[1:]

    def tree(self) -> RootedWeightedTree:
        return RootedWeightedTree(self.parent, self.weight, 0)


def pwit_prim(k: int, rng: np.random.Generator) -> PrimRun:
    """Run k-1 steps of Prim's algorithm on a lazily generated PWIT.

    A heap holds each explored vertex's cheapest unexplored child edge.  Popping
    it adds the child and materialises the next Poisson atom of the source and
    the first atom of the new vertex.  Ties are broken by insertion order.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    exps = rng.standard_exponential(2 * k - 1)
    parent, weight = _kernels.pwit_invasion(k, exps)
    return PrimRun(parent, weight)


def g_of_z(run, z: float) -> int:
    """Largest i with W(e_i) >= z (0 if there is none).

    ``run`` is a :class:`PrimRun` or a sequence of edge weights W(e_1), W(e_2), ...
    """
    w = run.edge_weights if isinstance(run, PrimRun) else np.asarray(run, dtype=float)
    hits = np.flatnonzero(w >= z)
    return int(hits[-1]) + 1 if hits.size else 0


@dataclass
class ForwardMaximalChain:
    """Forward-maximal weights ``x`` (decreasing, > 1), ``theta_x = theta(x)`` and sizes ``z``."""

    x: np.ndarray
    theta_x: np.ndarray
    z: np.ndarray

    def __len__(self):
        return int(self.x.shape[0])


def forward_maximal_sample(n_steps: int, rng: np.random.Generator) -> ForwardMaximalChain:
    """Sample (X_i, Z_i), i <= n_steps.

    theta(X_1) is uniform and theta(X_{i+1}) = U_i theta(X_i), since the
    conditional law of X_{i+1} given X_i = x has CDF theta(y)/theta(x) on (1, x).
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    u = np.cumprod(open_uniform(rng, n_steps))
    if np.any(u <= 0):
        raise ValueError("chain too long: theta(X_i) underflowed")
    return ForwardMaximalChain(theta_inverse(u), u, b_lambda_sample_from_theta(u, rng))


def build_T(
    chain: ForwardMaximalChain, depth: int, rng: np.random.Generator, max_vertices: int = 50_000_000
) -> RootedWeightedTree:
    """Glue uniform labelled trees P_1..P_depth into a finite portion of T.

    Edges of P_i get iid Uniform[0, X_i] weights; R_i and S_i are independent
    uniform vertices of P_i; the bridge {R_i, S_{i+1}} has weight X_i and S_1
    is the root.  ``meta`` records component membership and the glue vertices.
    """
    if not 1 <= depth <= len(chain):
        raise ValueError("depth must be between 1 and the chain length")
    sizes = chain.z[:depth].astype(np.int64)
    n = int(sizes.sum())
    if n > max_vertices:
        raise ValueError(f"{n} vertices exceed max_vertices={max_vertices}")
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    edges, weights = [], []
    s_ids = np.empty(depth, dtype=np.int64)
    r_ids = np.empty(depth, dtype=np.int64)
    for i in range(depth):
        m = int(sizes[i])
        piece = uniform_labelled_tree(m, rng)
        edges.append(piece.edges - 1 + offsets[i])
        weights.append(rng.uniform(0.0, chain.x[i], m - 1))
        s_ids[i] = offsets[i] + rng.integers(m)
        r_ids[i] = offsets[i] + rng.integers(m)
    bridges = np.column_stack((r_ids[:-1], s_ids[1:]))
    edges = np.concatenate(edges + [bridges])
    weights = np.concatenate(weights + [chain.x[: depth - 1]])
    component = np.repeat(np.arange(depth), sizes)
    tree = RootedWeightedTree.from_edges(
        n,
        edges,
        weights,
        int(s_ids[0]),
        activation=chain.x[component],
        meta={"component": component, "s_ids": s_ids, "r_ids": r_ids, "chain": chain},
    )
    tree.meta["safe_radius"] = int(tree.depth[r_ids[-1]])
    return tree


def t_ball_profile(tree: RootedWeightedTree, r_max: int) -> tuple[np.ndarray, bool]:
    """``|B_T(root, r)|`` for r = 0..r_max and whether the ball may be truncated.

    A portion built from depth components is exact up to the distance from the
    root to the last glue vertex R_depth; beyond it the missing components would
    start contributing, so the flag is raised.
    """
    if r_max < 0:
        raise ValueError("r_max must be nonnegative")
    d = tree.depth
    counts = np.bincount(d[d <= r_max], minlength=r_max + 1)
    truncated = r_max > tree.meta.get("safe_radius", np.inf)
    return np.cumsum(counts), bool(truncated)


def sample_t_ball(r: int, rng: np.random.Generator) -> RootedWeightedTree:
    """Exact sample of the ball B_T(root, r), without building whole components.

    Each P_i is explored breadth-first from S_i as a size-conditioned critical
    Poisson tree, stopping at the remaining radius.  R_i is uniform on the Z_i
    vertices, so it lands in the explored ball with probability |ball|/Z_i;
    the chain continues only while S_{i+1} is within distance r of the root.
    ``activation`` holds X_i for vertices of P_i and ``meta['depth']`` the
    distances to the root.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    parents, weights, acts, depths = [], [], [], []
    xs, us, zs = [], [], []
    u = float(open_uniform(rng))
    base = 0
    attach, attach_weight, dist_s = -1, np.nan, 0
    while True:
        x = float(theta_inverse(u))
        z = _size_biased(dual_gap_from_theta(u), rng, None)
        xs.append(x), us.append(u), zs.append(z)
        par, dep = _kernels.conditioned_tree_ball(rng, z, r - dist_s)
        cnt = par.shape[0]
        w = rng.uniform(0.0, x, cnt)
        w[0] = attach_weight
        gpar = par + base
        gpar[0] = attach
        parents.append(gpar), weights.append(w), acts.append(np.full(cnt, x)), depths.append(dep + dist_s)
        idx = int(rng.integers(z))
        if idx >= cnt or dist_s + dep[idx] + 1 > r:
            break
        attach, attach_weight = base + idx, x
        dist_s += int(dep[idx]) + 1
        base += cnt
        u *= float(open_uniform(rng))
    chain = ForwardMaximalChain(np.array(xs), np.array(us), np.array(zs, dtype=np.int64))
    return RootedWeightedTree(
        np.concatenate(parents),
        np.concatenate(weights),
        0,
        activation=np.concatenate(acts),
        meta={"depth": np.concatenate(depths), "chain": chain, "radius": r, "safe_radius": r},
    )
