"""Rooted weighted trees stored as parent arrays, plus a plain-text edge-list format."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from . import _kernels


@dataclass(eq=False)
class RootedWeightedTree:
    """A finite tree on vertices ``0..n-1`` with a distinguished root.

    ``parent[v]`` is the neighbour of ``v`` towards the root (-1 at the root) and
    ``weight[v]`` the weight of that edge (NaN at the root).  ``activation`` is an
    optional per-vertex time used by the aggregation process.
    """

    parent: np.ndarray
    weight: np.ndarray
    root: int
    activation: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.parent = np.asarray(self.parent, dtype=np.int64)
        self.weight = np.asarray(self.weight, dtype=np.float64)
        if self.parent.shape != self.weight.shape:
            raise ValueError("parent and weight arrays differ in length")
        if not 0 <= self.root < self.parent.shape[0]:
            raise ValueError("root outside the vertex range")
        if self.parent[self.root] != -1:
            raise ValueError("root must have parent -1")

    @property
    def n(self) -> int:
        return int(self.parent.shape[0])

    @property
    def edges(self) -> np.ndarray:
        """(n-1, 2) array of (parent, child) pairs."""
        child = np.flatnonzero(self.parent >= 0)
        return np.column_stack((self.parent[child], child))

    @property
    def edge_weights(self) -> np.ndarray:
        return self.weight[self.parent >= 0]

    @cached_property
    def csr(self) -> sparse.csr_array:
        """Symmetric adjacency; entries hold the child endpoint of each edge plus one."""
        e = self.edges
        rows = np.concatenate((e[:, 0], e[:, 1]))
        cols = np.concatenate((e[:, 1], e[:, 0]))
        tag = np.concatenate((e[:, 1], e[:, 1])) + 1
        a = sparse.csr_array((tag, (rows, cols)), shape=(self.n, self.n))
        a.sort_indices()
        return a

    @cached_property
    def depth(self) -> np.ndarray:
        return self.distances_from(self.root)

    def distances_from(self, center: int, rmax: int | None = None) -> np.ndarray:
        """Hop distances from ``center`` (-1 beyond ``rmax``)."""
        if not 0 <= center < self.n:
            raise ValueError(f"vertex {center} is not in the tree")
        a = self.csr
        r = np.iinfo(np.int64).max if rmax is None else int(rmax)
        return _kernels.bfs_distances(a.indptr.astype(np.int64), a.indices.astype(np.int64), center, r)

    def degree(self, v: int) -> int:
        a = self.csr
        return int(a.indptr[v + 1] - a.indptr[v])

    def incident_weight(self, v: int) -> float:
        a = self.csr
        tags = a.data[a.indptr[v] : a.indptr[v + 1]] - 1
        return float(self.weight[tags].sum())

    def children_lists(self) -> list[np.ndarray]:
        order = np.argsort(self.parent, kind="stable")
        counts = np.bincount(self.parent[self.parent >= 0], minlength=self.n)
        starts = np.concatenate(([0], np.cumsum(counts)))
        kids = order[self.parent[order] >= 0]
        return [kids[starts[v] : starts[v + 1]] for v in range(self.n)]

    def subtree(self, keep: np.ndarray) -> "RootedWeightedTree":
        """Induced tree on a parent-closed vertex set containing the root; ids are compacted."""
        keep = np.asarray(keep)
        if keep.dtype == bool:
            keep = np.flatnonzero(keep)
        keep = np.sort(keep)
        newid = np.full(self.n, -1, dtype=np.int64)
        newid[keep] = np.arange(keep.size)
        par = self.parent[keep]
        mapped = np.where(par >= 0, newid[np.maximum(par, 0)], -1)
        if np.any((par >= 0) & (mapped < 0)):
            raise ValueError("vertex set is not closed under taking parents")
        act = None if self.activation is None else self.activation[keep]
        meta = dict(self.meta)
        meta["original_ids"] = keep
        return RootedWeightedTree(mapped, self.weight[keep], int(newid[self.root]), act, meta)

    def reroot(self, root: int) -> "RootedWeightedTree":
        return RootedWeightedTree.from_edges(
            self.n, self.edges, self.edge_weights, root, activation=self.activation
        )

    @classmethod
    def from_edges(cls, n, edges, weights, root, activation=None, meta=None):
        """Build from an undirected edge list; raises if the edges do not span a tree."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=np.float64)
        if edges.shape[0] != n - 1:
            raise ValueError(f"a tree on {n} vertices needs {n - 1} edges, got {edges.shape[0]}")
        eid = np.arange(edges.shape[0]) + 1
        rows = np.concatenate((edges[:, 0], edges[:, 1]))
        cols = np.concatenate((edges[:, 1], edges[:, 0]))
        a = sparse.csr_array((np.concatenate((eid, eid)), (rows, cols)), shape=(n, n))
        a.sort_indices()
        order, parent, payload, _ = _kernels.bfs_tree(
            a.indptr.astype(np.int64), a.indices.astype(np.int64), a.data.astype(np.int64), int(root)
        )
        if order.shape[0] != n:
            raise ValueError("edge list is not connected")
        weight = np.full(n, np.nan)
        has = parent >= 0
        weight[has] = weights[payload[has] - 1]
        return cls(parent, weight, int(root), activation, dict(meta or {}))

    def to_text(self) -> str:
        lines = [f"# rooted-tree n={self.n} root={self.root}"]
        for (p, c), w in zip(self.edges, self.edge_weights):
            lines.append(f"{p} {c} {w:.17g}")
        return "\n".join(lines) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "RootedWeightedTree":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("# rooted-tree"):
            raise ValueError("missing '# rooted-tree' header")
        fields = dict(tok.split("=") for tok in lines[0].split()[2:])
        n, root = int(fields["n"]), int(fields["root"])
        rows = [ln.split() for ln in lines[1:]]
        edges = np.array([[int(p), int(c)] for p, c, _ in rows], dtype=np.int64).reshape(-1, 2)
        weights = np.array([float(w) for _, _, w in rows])
        return cls.from_edges(n, edges, weights, root)

    @classmethod
    def read(cls, path: str | Path) -> "RootedWeightedTree":
        return cls.from_text(Path(path).read_text())


def single_vertex() -> RootedWeightedTree:
    return RootedWeightedTree(np.array([-1]), np.array([np.nan]), 0)
