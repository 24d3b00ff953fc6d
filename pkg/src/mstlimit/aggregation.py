"""The Poisson Galton-Watson aggregation process that grows M out of T.

Once a vertex v is active (from time x(v) on) subcritical Poisson trees attach
to it at rate 1 - theta(t).  A tree attaching at time t is pgw(t*); its root is
joined to v by an edge of weight exactly t, its internal edges carry
Exponential(1) weights conditioned to be at most t, and all its vertices become
active at time t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache, lru_cache

import numpy as np
from scipy import integrate
from scipy.special import spence

from .pgw_core import NUMERICS, dual, dual_gap_from_theta, extinction, theta, theta_inverse, theta_prime
from .pgw_core import _size_biased
from .pwit import open_uniform
from .trees import RootedWeightedTree

_QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


def _extinction_tail(a, b):
    # beyond t_max, 1 - theta(t) agrees with e^{-t} to within e^{-2t}
    return math.exp(-a) - (0.0 if math.isinf(b) else math.exp(-b))


def attachment_intensity(a: float, b: float = math.inf) -> float:
    """Integral of 1 - theta(t) over [a, b]; a >= 1, b may be infinite."""
    if a < 1:
        raise ValueError("attachment times start at 1")
    if b < a:
        raise ValueError("need a <= b")
    t_max = NUMERICS.t_max
    total = 0.0
    if a < t_max:
        hi = min(b, t_max)
        total += integrate.quad(extinction, a, hi, **_QUAD)[0]
    if b > t_max:
        total += _extinction_tail(max(a, t_max), b)
    return total


@dataclass(frozen=True)
class _Tables:
    """Tail integrals on a fine grid, used by the vectorised samplers."""

    x: np.ndarray
    rate_tail: np.ndarray  # integral of 1 - theta over [x, inf)
    moment_tail: np.ndarray  # integral of t (1 - theta(t)) over [x, inf)

    def intensity(self, x):
        return np.interp(x, self.x, self.rate_tail, right=0.0)

    def invert(self, y):
        """The x with rate_tail(x) = y."""
        return np.interp(y, self.rate_tail[::-1], self.x[::-1])


@cache
def _tables(points: int = 2**16 + 1) -> _Tables:
    t_max = NUMERICS.t_max
    x = np.linspace(1.0, t_max, points)
    q = np.asarray(extinction(x))
    head = integrate.cumulative_simpson(q, x=x, initial=0.0)
    rate = head[-1] - head + math.exp(-t_max)
    head2 = integrate.cumulative_simpson(x * q, x=x, initial=0.0)
    moment = head2[-1] - head2 + (t_max + 1.0) * math.exp(-t_max)
    return _Tables(x, rate, moment)


def _sample_times(x, counts, rng):
    """Attachment times for hosts with activation ``x`` and given counts, host-major order."""
    tab = _tables()
    hosts = np.repeat(np.asarray(x, dtype=float), counts)
    y = open_uniform(rng, hosts.size) * tab.intensity(hosts)
    return np.maximum(tab.invert(y), np.nextafter(hosts, np.inf))


def attachment_times(x_v: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted atoms of a Poisson process with rate 1 - theta(t) on (max(x_v, 1), inf)."""
    if x_v < 1:
        raise ValueError("activation times are at least 1")
    count = rng.poisson(_tables().intensity(x_v))
    return np.sort(_sample_times([x_v], [count], rng))


def _truncated_exponential(cap, rng):
    """Exponential(1) conditioned on being at most ``cap`` (elementwise)."""
    u = open_uniform(rng, np.shape(cap))
    return -np.log1p(u * np.expm1(-np.asarray(cap)))


@dataclass
class AggregationCluster:
    """Everything that attaches to a host of activation time ``host_time``, host included.

    ``tree`` has the host as vertex 0 (its root); ``level[v]`` counts how many
    attachment edges separate v from the host.
    """

    host_time: float
    tree: RootedWeightedTree
    level: np.ndarray
    truncated: bool

    @property
    def size(self) -> int:
        return self.tree.n


class _Growth:
    """Level-synchronous growth of clusters from a set of seed vertices.

    Seeds only receive attachments; every other vertex also gets its
    pgw(x*) children at its own activation time.
    """

    def __init__(self, rng, attachment_scale=1.0):
        self.rng = rng
        self.scale = attachment_scale
        self.parent, self.weight, self.act, self.level, self.gen = [], [], [], [], []
        self.count = 0

    def add(self, parent, weight, act, level, gen):
        ids = np.arange(self.count, self.count + parent.size)
        self.parent.append(parent), self.weight.append(weight), self.act.append(act)
        self.level.append(level), self.gen.append(np.full(parent.size, gen))
        self.count += parent.size
        return ids

    def children(self, ids, act, level, is_seed):
        """Children of the given vertices: (parent, weight, activation, level)."""
        rng = self.rng
        tab = _tables()
        n_att = rng.poisson(self.scale * tab.intensity(act)) if self.scale > 0 else np.zeros(ids.size, int)
        t = _sample_times(act, n_att, rng)
        p1 = np.repeat(ids, n_att)
        l1 = np.repeat(level, n_att) + 1
        grow = ~is_seed
        mu = np.asarray(dual(act[grow])) if grow.any() else np.zeros(0)
        n_kid = rng.poisson(mu)
        p2 = np.repeat(ids[grow], n_kid)
        a2 = np.repeat(act[grow], n_kid)
        l2 = np.repeat(level[grow], n_kid)
        w2 = _truncated_exponential(a2, rng)
        return (
            np.concatenate((p1, p2)),
            np.concatenate((t, w2)),
            np.concatenate((t, a2)),
            np.concatenate((l1, l2)),
        )


def grow_cluster(x_v: float, size_cap: int, rng: np.random.Generator) -> AggregationCluster:
    """Sample the full cluster aggregated onto a vertex of T with x(v) = x_v."""
    if x_v < 1:
        raise ValueError("activation times are at least 1")
    g = _Growth(rng)
    ids = g.add(np.array([-1]), np.array([np.nan]), np.array([float(x_v)]), np.array([0]), 0)
    act, level, seed = np.array([float(x_v)]), np.array([0]), np.array([True])
    truncated = False
    gen = 0
    while ids.size:
        par, w, a, lv = g.children(ids, act, level, seed)
        gen += 1
        if g.count + par.size > size_cap:
            truncated = True
            break
        ids = g.add(par, w, a, lv, gen)
        act, level, seed = a, lv, np.zeros(ids.size, bool)
    tree = RootedWeightedTree(
        np.concatenate(g.parent), np.concatenate(g.weight), 0, activation=np.concatenate(g.act)
    )
    return AggregationCluster(float(x_v), tree, np.concatenate(g.level), truncated)


def grow_M_ball(
    t_portion: RootedWeightedTree, r: int, rng: np.random.Generator, attachment_scale: float = 1.0
) -> RootedWeightedTree:
    """Exact ball B_M(root, r) grown from a portion of T that covers B_T(root, r).

    Vertices of T keep their ids (restricted to the ball); grown vertices are
    appended.  ``meta`` holds hop depths, levels and a mask of T vertices.
    """
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if t_portion.activation is None:
        raise ValueError("the T portion needs activation times")
    if t_portion.meta.get("safe_radius", math.inf) < r:
        raise ValueError("the T portion does not cover the requested radius")
    t_ball = t_portion.subtree(t_portion.depth <= r)
    depth_t = t_ball.depth
    g = _Growth(rng, attachment_scale)
    g.add(t_ball.parent, t_ball.weight, t_ball.activation, np.zeros(t_ball.n, np.int64), 0)
    depth = [depth_t]
    new_ids = np.zeros(0, np.int64)
    new_act = np.zeros(0)
    new_level = np.zeros(0, np.int64)
    for d in range(r):
        t_ids = np.flatnonzero(depth_t == d)
        ids = np.concatenate((t_ids, new_ids))
        act = np.concatenate((t_ball.activation[t_ids], new_act))
        level = np.concatenate((np.zeros(t_ids.size, np.int64), new_level))
        seed = np.concatenate((np.ones(t_ids.size, bool), np.zeros(new_ids.size, bool)))
        par, w, a, lv = g.children(ids, act, level, seed)
        new_ids = g.add(par, w, a, lv, d + 1)
        new_act, new_level = a, lv
        depth.append(np.full(new_ids.size, d + 1))
    is_t = np.zeros(g.count, bool)
    is_t[: t_ball.n] = True
    return RootedWeightedTree(
        np.concatenate(g.parent),
        np.concatenate(g.weight),
        t_ball.root,
        activation=np.concatenate(g.act),
        meta={"depth": np.concatenate(depth), "level": np.concatenate(g.level), "in_T": is_t},
    )


def _cluster_rate_integral(lam: float, nu: float) -> float:
    """Integral over [lam, nu] of (1 - theta(x)) / (1 - x*), computed in s = log(x - 1)."""
    t_max = NUMERICS.t_max

    def f(s):
        x = 1.0 + math.exp(s)
        q = extinction(x)
        return q / (1.0 - x * q) * math.exp(s)

    hi = min(nu, t_max)
    total = integrate.quad(f, math.log(lam - 1.0), math.log(hi - 1.0), **_QUAD)[0] if hi > lam else 0.0
    if nu > t_max:
        total += _extinction_tail(max(lam, t_max), nu)
    return total


def n_k(lam: float, nu: float, k: int) -> float:
    """Expected number of level-k vertices in a cluster activated at lam, counting times below nu.

    Equals I^k / k! with I the integral of (1 - theta)/(1 - x*) over [lam, nu].
    """
    if not lam > 1:
        raise ValueError("lam must exceed 1")
    if nu < lam:
        raise ValueError("need lam <= nu")
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k == 0:
        return 1.0
    i = _cluster_rate_integral(lam, nu)
    return math.exp(k * math.log(i) - math.lgamma(k + 1)) if i > 0 else 0.0


def expected_cluster_size(lam: float, nu: float = math.inf) -> float:
    """Sum over k of n_k(lam, nu), i.e. exp(I)."""
    if not lam > 1:
        raise ValueError("lam must exceed 1")
    return math.exp(_cluster_rate_integral(lam, nu))


def root_degree_sample(rng: np.random.Generator, size=None, attachments: bool = True):
    """Degree of the root of M as D1 + D2 + D3.

    X1 = theta^{-1}(U) and Z1 ~ B_{X1}; D1 is the root's degree inside its
    uniform component (1 + Binomial(Z1 - 2, 1/Z1), or 0 when Z1 = 1); D2
    indicates that the forward-maximal bridge starts at the root (probability
    1/Z1); D3 ~ Poisson of the attachment intensity over (X1, inf).
    """
    shape = () if size is None else size
    u = open_uniform(rng, shape if shape else 1)
    z = _size_biased(dual_gap_from_theta(u), rng, np.shape(u))
    d1 = np.where(z >= 2, 1 + rng.binomial(np.maximum(z - 2, 0), 1.0 / z), 0)
    d2 = rng.random(np.shape(u)) < 1.0 / z
    deg = d1 + d2
    if attachments:
        deg = deg + rng.poisson(_tables().intensity(theta_inverse(u)))
    return int(deg[0]) if size is None else deg.reshape(shape)


def _log_ratio(x):
    # log(1/x) / (1 - x); removable singularity at x = 1
    if x >= 1.0:
        return 1.0
    return -math.log1p(x - 1.0) / (1.0 - x) if x > 0.5 else -math.log(x) / (1.0 - x)


@cache
def _phi_grid(points: int = 257):
    u = np.linspace(0.0, 1.0, points)
    pieces = [integrate.quad(_log_ratio, a, b, **_QUAD)[0] for a, b in zip(u[:-1], u[1:])]
    return u, np.concatenate(([0.0], np.cumsum(pieces)))


def phi(u: float) -> float:
    """Integral of log(1/x)/(1-x) over [0, u]."""
    if not 0 <= u <= 1:
        raise ValueError("u must lie in [0, 1]")
    grid, values = _phi_grid()
    j = min(int(np.searchsorted(grid, u, side="right")) - 1, grid.size - 2)
    if u == grid[j]:
        return float(values[j])
    return float(values[j]) + integrate.quad(_log_ratio, grid[j], u, **_QUAD)[0]


@lru_cache(maxsize=None)
def aldous_degree_pmf(i: int) -> float:
    """P(deg = i + 1) for the root of M: the Poisson(phi(U)) mixture at i, U uniform on [0, 1]."""
    if i < 0:
        raise ValueError("i must be nonnegative")

    def f(u):
        p = phi(u)
        return math.exp(-p + i * math.log(p) - math.lgamma(i + 1)) if p > 0 else float(i == 0)

    return integrate.quad(f, 0.0, 1.0, epsabs=1e-11, epsrel=1e-10, limit=200)[0]


def aldous_degree_table(max_degree: int = 40) -> np.ndarray:
    """Probabilities of degrees 0..max_degree (degree 0 has mass 0)."""
    return np.array([0.0] + [aldous_degree_pmf(i) for i in range(max_degree)])


def phi_closed_form(u):
    """zeta(2) - Li2(1 - u), the dilogarithm form of :func:`phi` (used as a cross-check)."""
    return math.pi**2 / 6 - spence(np.asarray(u, dtype=float))


def zeta_identity(weight=None) -> float:
    """E of the integral over (theta^{-1}(U), inf) of t (1 - theta(t)), by nested quadrature.

    Written as the integral over s > 1 of theta'(s) G(s), with G(s) the inner
    tail integral.  ``weight`` replaces t (1 - theta(t)) when given.
    """
    w = weight or (lambda t: t * extinction(t))
    t_max = NUMERICS.t_max

    def inner(s):
        return integrate.quad(w, s, t_max, **_QUAD)[0]

    def outer(s):
        return theta_prime(s) * inner(s) if s > 1 else 2.0 * inner(1.0)

    head = integrate.quad(outer, 1.0, 3.0, **_QUAD)[0]
    tail = integrate.quad(outer, 3.0, t_max, **_QUAD)[0]
    return head + tail


def zeta_identity_mc(samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo estimate (mean, standard error): draw X = theta^{-1}(U), integrate the tail."""
    x = theta_inverse(open_uniform(rng, samples))
    tab = _tables()
    vals = np.interp(x, tab.x, tab.moment_tail, right=0.0)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))
