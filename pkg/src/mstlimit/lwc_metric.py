"""Canonical codes for balls of rooted weighted trees and a plug-in TV distance between code samples."""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .trees import RootedWeightedTree

DEFAULT_DELTA = 0.05


@dataclass(frozen=True)
class BallCode:
    """Isomorphism class of a radius-r ball with weights rounded to multiples of ``delta``.

    ``text`` is the canonical nested form and ``digest`` its 128-bit hex fingerprint;
    equality and hashing use ``(radius, delta, digest)``.
    """

    radius: int
    delta: float
    digest: str
    text: str = field(compare=False, repr=False)


def _ball_orientation(tree: RootedWeightedTree, root: int, r: int):
    """Ball vertices with each one's neighbour towards ``root`` and that edge's weight."""
    dist = tree.distances_from(root, r)
    ball = np.flatnonzero(dist >= 0)
    up = np.full(tree.n, -1, dtype=np.int64)
    upw = np.full(tree.n, np.nan)
    par = tree.parent[ball]
    has = par >= 0
    v, p = ball[has], par[has]
    dp = dist[p]
    # stored parent already points towards root
    toward = dp == dist[v] - 1
    up[v[toward]], upw[v[toward]] = p[toward], tree.weight[v[toward]]
    # otherwise the stored child is the one closer to root
    away = (dp >= 0) & (dp == dist[v] + 1)
    up[p[away]], upw[p[away]] = v[away], tree.weight[v[away]]
    return ball, dist, up, upw


def canonical_code(tree: RootedWeightedTree, root: int | None = None, r: int = 2, delta: float = DEFAULT_DELTA) -> BallCode:
    """Code of B(root, r): each vertex is the sorted list of ``q:child`` entries, q = round(w / delta).

    ``delta = inf`` drops the weights and keeps only the shape.
    """
    root = tree.root if root is None else int(root)
    if not 0 <= root < tree.n:
        raise ValueError(f"vertex {root} is not in the tree")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if not delta > 0:
        raise ValueError("delta must be positive")
    ball, dist, up, upw = _ball_orientation(tree, root, r)
    shape_only = math.isinf(delta)
    kids: dict[int, list[str]] = {int(v): [] for v in ball}
    text = {}
    for v in ball[np.argsort(-dist[ball], kind="stable")]:
        v = int(v)
        text[v] = "(" + ",".join(sorted(kids[v])) + ")"
        if v != root:
            q = "" if shape_only else f"{int(np.rint(upw[v] / delta))}:"
            kids[int(up[v])].append(q + text[v])
    code = text[root]
    digest = hashlib.blake2b(code.encode(), digest_size=16).hexdigest()
    return BallCode(int(r), float(delta), digest, code)


def empirical_tv(codes_a: Iterable[BallCode], codes_b: Iterable[BallCode]) -> float:
    """Half the L1 distance between the empirical laws of two code samples."""
    a, b = list(codes_a), list(codes_b)
    if not a or not b:
        raise ValueError("both samples must be nonempty")
    params = {(c.radius, c.delta) for c in a} | {(c.radius, c.delta) for c in b}
    if len(params) != 1:
        raise ValueError(f"codes mix radius/delta settings: {sorted(params)}")
    ca, cb = Counter(c.digest for c in a), Counter(c.digest for c in b)
    na, nb = len(a), len(b)
    return 0.5 * sum(abs(ca[k] / na - cb[k] / nb) for k in ca.keys() | cb.keys())
