"""Poisson Galton-Watson numerics.

Survival probability theta(lam) of a Poisson(lam) Galton-Watson tree, its
derivative, the dual (conditioned-on-extinction) parameter, the Borel-Tanner
size law and its truncated size-biased analogue, with samplers for each.

Functions taking ``lam`` accept scalars or numpy arrays and return the same kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cache

import numpy as np
from scipy.special import gammaln

from . import _kernels
from .trees import RootedWeightedTree


@dataclass(frozen=True)
class GwNumerics:
    solver_tolerance: float = 1e-12
    t_max: float = 40.0

    def __post_init__(self):
        if not self.solver_tolerance > 0:
            raise ValueError("solver_tolerance must be positive")
        if not self.t_max > 1:
            raise ValueError("t_max must exceed 1")


NUMERICS = GwNumerics()


def _as_array(x, name="lam"):
    a = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


def _out(a, like):
    return float(a) if np.ndim(like) == 0 else a


def _theta_supercritical(lam, tol):
    # f(t) = 1 - exp(-lam t) - t is positive on (0, root) and negative after it.
    # (lam-1)/lam^2 lies below the root because 1 - e^{-x} >= x - x^2/2.
    lo = (lam - 1.0) / lam**2
    hi = np.ones_like(lam)
    iters = int(math.ceil(math.log2(1.0 / tol))) + 2
    for _ in range(min(iters, 60)):
        mid = 0.5 * (lo + hi)
        pos = -np.expm1(-lam * mid) - mid > 0
        lo = np.where(pos, mid, lo)
        hi = np.where(pos, hi, mid)
    t = 0.5 * (lo + hi)
    for _ in range(3):
        e = np.exp(-lam * t)
        f = -np.expm1(-lam * t) - t
        step = f / (lam * e - 1.0)
        t = np.clip(t - step, lo, hi)
    return t


def _theta_scalar(lam, tol):
    lo, hi = (lam - 1.0) / lam**2, 1.0
    for _ in range(min(int(math.ceil(math.log2(1.0 / tol))) + 2, 60)):
        mid = 0.5 * (lo + hi)
        if -math.expm1(-lam * mid) - mid > 0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    for _ in range(3):
        f = -math.expm1(-lam * t) - t
        t = min(max(t - f / (lam * math.exp(-lam * t) - 1.0), lo), hi)
    return t


def theta(lam, numerics: GwNumerics = NUMERICS):
    """Survival probability of a Poisson(lam) Galton-Watson tree.

    Zero for lam <= 1; otherwise the root in (0, 1) of ``1 - t = exp(-lam t)``.
    """
    if isinstance(lam, (float, int)) and not isinstance(lam, bool):
        if not math.isfinite(lam) or lam < 0:
            raise ValueError("lam must be finite and nonnegative")
        return _theta_scalar(float(lam), numerics.solver_tolerance) if lam > 1 else 0.0
    a = _as_array(lam)
    if np.any(a < 0):
        raise ValueError("lam must be nonnegative")
    out = np.zeros_like(a)
    sup = a > 1.0
    if np.any(sup):
        out[sup] = _theta_supercritical(a[sup], numerics.solver_tolerance)
    return _out(out, lam)


def extinction(lam, numerics: GwNumerics = NUMERICS):
    """``1 - theta(lam)`` evaluated as ``exp(-lam theta)``, accurate for large lam."""
    if isinstance(lam, (float, int)):
        return math.exp(-lam * theta(lam, numerics))
    a = _as_array(lam)
    if np.any(a < 0):
        raise ValueError("lam must be nonnegative")
    th = np.asarray(theta(a, numerics))
    return _out(np.exp(-a * th), lam)


def theta_prime(lam, numerics: GwNumerics = NUMERICS):
    """d theta / d lam = theta (1 - theta) / (1 - lam (1 - theta)), for lam > 1."""
    a = _as_array(lam)
    if np.any(a <= 1.0):
        raise ValueError("theta_prime is only defined for lam > 1")
    th = np.asarray(theta(a, numerics))
    q = np.exp(-a * th)
    return _out(th * q / (1.0 - a * q), lam)


def theta_inverse(u):
    """The lam > 1 with theta(lam) = u, for u in (0, 1): lam = -log(1-u)/u."""
    a = _as_array(u, "u")
    if np.any((a <= 0) | (a >= 1)):
        raise ValueError("u must lie in (0, 1)")
    return _out(-np.log1p(-a) / a, u)


def dual_gap_from_theta(u):
    """``1 - lam*`` for the lam with theta(lam) = u, stable as u -> 0.

    ``1 - lam*`` equals ``(u + (1-u) log(1-u)) / u``; for small u the series
    ``sum_{k>=2} u^{k-1} / (k (k-1))`` avoids cancellation.
    """
    a = np.asarray(u, dtype=np.float64)
    small = a < 1e-3
    out = np.empty_like(a)
    s = a[small]
    series = np.zeros_like(s)
    for k in range(12, 1, -1):
        series = series * s + 1.0 / (k * (k - 1))
    out[small] = s * series
    b = a[~small]
    out[~small] = (b + (1.0 - b) * np.log1p(-b)) / b
    return _out(out, u)


def _bisect(f, lo, hi, tol):
    flo = f(lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dual(c, numerics: GwNumerics = NUMERICS):
    """The other solution c' of ``c e^{-c} = c' e^{-c'}``; dual(1) = 1.

    For c > 1 this is ``c (1 - theta(c))`` in (0, 1); for c < 1 it is the
    supercritical partner, found by bisection in the survival parametrisation.
    """
    a = _as_array(c, "c")
    if np.any(a <= 0):
        raise ValueError("c must be positive")
    out = np.ones_like(a)
    sup = a > 1.0
    if np.any(sup):
        out[sup] = a[sup] * np.asarray(extinction(a[sup], numerics))
    sub = np.flatnonzero(a < 1.0)
    for i in sub:
        ci = float(a.flat[i])
        # lam(1 - u) with lam = theta_inverse(u) decreases from 1 to 0 on (0, 1)
        g = lambda u: -(1.0 - u) * math.log1p(-u) / u - ci  # noqa: E731
        u = _bisect(g, 1e-300, 1.0 - 1e-16, 1e-16)
        out.flat[i] = -math.log1p(-u) / u
    return _out(out, c)


@cache
def x1_root() -> float:
    """The unique lam > 1 with theta'(lam) = 1."""
    return _bisect(lambda x: theta_prime(x) - 1.0, 1.0 + 1e-6, 3.0, 1e-13)


def _log_bt_kernel(lam, m):
    # log of e^{-lam m} (lam m)^{m-1} / (m-1)!
    return -lam * m + (m - 1) * np.log(lam * m) - gammaln(m)


def _check_sizes(m):
    m = np.asarray(m)
    if np.any(m < 1):
        raise ValueError("sizes start at 1")
    return m.astype(np.float64)


def borel_tanner_pmf(lam, m):
    """P(|T| = m) for a Poisson(lam) Galton-Watson tree T, 0 < lam <= 1."""
    if not 0 < lam <= 1:
        raise ValueError("Borel-Tanner pmf needs 0 < lam <= 1")
    mf = _check_sizes(m)
    out = np.exp(_log_bt_kernel(lam, mf) - np.log(mf))
    return _out(out, m)


def borel_tanner_sample(lam, rng: np.random.Generator, size=None):
    """Total progeny of a Poisson(lam) Galton-Watson tree, 0 <= lam < 1."""
    if not 0 <= lam < 1:
        raise ValueError("Borel-Tanner sampling needs 0 <= lam < 1")
    k = 1 if size is None else int(np.prod(size))
    draws = _kernels.borel_tanner_draws(rng, float(lam), k)
    return int(draws[0]) if size is None else draws.reshape(size)


def b_lambda_pmf(lam, m):
    """Truncated size-biased size law: ``(theta/theta') e^{-lam m} (lam m)^{m-1}/(m-1)!``."""
    if not lam > 1:
        raise ValueError("B_lambda needs lam > 1")
    mf = _check_sizes(m)
    th = theta(lam)
    q = math.exp(-lam * th)
    log_ratio = math.log1p(-lam * q) - math.log(q)  # log(theta / theta')
    return _out(np.exp(log_ratio + _log_bt_kernel(lam, mf)), m)


def b_lambda_pmf_dual_form(lam, m):
    """Same law written as ``c * m * P(|pgw(lam*)| = m)`` with ``c = theta lam* / (lam theta')``."""
    if not lam > 1:
        raise ValueError("B_lambda needs lam > 1")
    mf = _check_sizes(m)
    star = dual(lam)
    c = theta(lam) * star / (lam * theta_prime(lam))
    return _out(c * mf * np.asarray(borel_tanner_pmf(star, mf)), m)


# Below this gap the exact recursion needs ~1/gap generations and sizes approach
# int64 range; the size-biased law is then replaced by its scaling limit
# Gamma(1/2, rate gap^2/2), whose relative error is O(gap).
_EXACT_GAP = 1e-7
_SIZE_CEILING = 2**62


def _size_biased(gap, rng, size):
    g = np.ascontiguousarray(
        np.broadcast_to(np.asarray(gap, dtype=np.float64), (1,) if size is None else size)
    ).ravel()
    draws = np.empty(g.shape, dtype=np.int64)
    exact = g >= _EXACT_GAP
    draws[exact] = _kernels.size_biased_draws(rng, g[exact])
    if not np.all(exact):
        tiny = g[~exact]
        z = rng.gamma(0.5, 2.0 / tiny**2)
        draws[~exact] = np.clip(np.ceil(z), 1, _SIZE_CEILING).astype(np.int64)
    return int(draws[0]) if size is None else draws.reshape(size)


def b_lambda_sample(lam, rng: np.random.Generator, size=None, method: str = "spine"):
    """Draw from the truncated size-biased law at lam > 1.

    ``method="spine"`` (default) is exact and table-free: a uniformly marked
    vertex of a size-biased subcritical tree.  ``method="inversion"`` inverts a
    cumulative table of the pmf.
    """
    if not lam > 1:
        raise ValueError("B_lambda needs lam > 1")
    if method == "spine":
        gap = 1.0 - lam * extinction(lam)
        return _size_biased(gap, rng, size)
    if method == "inversion":
        return TruncatedSizeBiasedLaw(lam).sample(rng, size)
    raise ValueError(f"unknown method {method!r}")


def b_lambda_sample_from_theta(u, rng: np.random.Generator):
    """Vectorised draw of B_lam for lam = theta_inverse(u), stable for u near 0."""
    u = np.asarray(u, dtype=np.float64)
    return _size_biased(dual_gap_from_theta(u), rng, u.shape)


@dataclass
class _InversionTable:
    pmf: callable
    mass: float = 1.0 - 1e-12
    cdf: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def extend(self):
        size = max(64, 2 * self.cdf.size)
        m = np.arange(self.cdf.size + 1, size + 1)
        start = self.cdf[-1] if self.cdf.size else 0.0
        self.cdf = np.concatenate((self.cdf, start + np.cumsum(self.pmf(m))))

    def sample(self, rng, size=None):
        while not self.cdf.size or (self.cdf[-1] < self.mass and self.cdf.size < 1 << 26):
            self.extend()
        u = rng.random(size)
        # mass beyond the table lands in the last bucket
        idx = np.searchsorted(self.cdf, u, side="right")
        out = np.minimum(idx, self.cdf.size - 1) + 1
        return int(out) if size is None else out


@dataclass
class BorelTannerLaw:
    lam: float
    _table: _InversionTable | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 < self.lam <= 1:
            raise ValueError("Borel-Tanner law needs 0 < lam <= 1")

    def pmf(self, m):
        return borel_tanner_pmf(self.lam, m)

    @property
    def mean(self):
        return 1.0 / (1.0 - self.lam) if self.lam < 1 else math.inf

    @property
    def second_moment(self):
        return 1.0 / (1.0 - self.lam) ** 3 if self.lam < 1 else math.inf

    def sample(self, rng, size=None):
        return borel_tanner_sample(self.lam, rng, size)


@dataclass
class TruncatedSizeBiasedLaw:
    lam: float
    _table: _InversionTable | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("B_lambda needs lam > 1")

    def pmf(self, m):
        return b_lambda_pmf(self.lam, m)

    def total_mass(self, tail=1e-14) -> float:
        """Sum of the pmf until the remaining geometric tail is below ``tail``."""
        # terms decay like (lam e^{1-lam})^m m^{-1/2}
        rate = -(math.log(self.lam) + 1.0 - self.lam)
        m_max = int(math.ceil((math.log(1.0 / tail) + 10.0) / rate)) + 10
        m = np.arange(1, m_max + 1)
        return math.fsum(self.pmf(m))

    def sample(self, rng, size=None):
        if self._table is None:
            self._table = _InversionTable(self.pmf)
        return self._table.sample(rng, size)


def pgw_sample(lam, size_cap: int, rng: np.random.Generator) -> RootedWeightedTree | None:
    """Breadth-first Poisson(lam) Galton-Watson tree with unit edge weights.

    Returns ``None`` once the tree would exceed ``size_cap`` vertices; for lam > 1
    callers read that as survival.
    """
    if size_cap < 1:
        raise ValueError("size_cap must be at least 1")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    parents = [np.array([-1], dtype=np.int64)]
    frontier = np.array([0], dtype=np.int64)
    total = 1
    while frontier.size:
        kids = rng.poisson(lam, size=frontier.size)
        born = int(kids.sum())
        if total + born > size_cap:
            return None
        frontier_par = np.repeat(frontier, kids)
        parents.append(frontier_par)
        frontier = np.arange(total, total + born, dtype=np.int64)
        total += born
    parent = np.concatenate(parents)
    weight = np.ones(total)
    weight[0] = np.nan
    return RootedWeightedTree(parent, weight, 0)
