"""Asymptotic shape estimation and maximal-function statistics.

The directional constant along an integer direction is the infimum of the
per-step means over increasing multiples, matching the inf-of-means
characterization of the subadditive limit rather than any curve fit.
Maximal functions are computed on finite windows; the window always
travels with the reported statistics so truncation stays auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .environment import Environment, WeightModel
from .lattice import BoxRegion, Site, norm1
from .percolation import BoxGraph

@dataclass(frozen=True)
class DirectionalSeries:
    """Convergence series of one direction: a_k = mean over seeds of
    rho(0, k*theta) / (k |theta|)."""

    direction: Site
    ks: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray
    excluded_fraction: float
    flagged: bool

    @property
    def estimate(self) -> float:
        """Inf-of-means extrapolation of the normalized constant."""
        return float(np.min(self.means))

    @property
    def estimate_stderr(self) -> float:
        return float(self.stderrs[int(np.argmin(self.means))])


def _direction_profile(env: Environment, theta: Site, n_max: int,
                       tol: float, radius_cap_factor: int = 16):
    """rho(0, k*theta) for k = 1..n_max from single-source searches in a
    common refining box.  Returns (values, converged flags)."""
    theta = tuple(theta)
    zero = (0,) * env.dimension
    targets = [tuple(k * t for t in theta) for k in range(1, n_max + 1)]
    gap = norm1(targets[-1])
    center = tuple(c // 2 for c in targets[-1])
    radius = 2 * gap
    cap = radius_cap_factor * gap

    def profile(r: int) -> np.ndarray:
        g = BoxGraph(env, BoxRegion(center, r, "l1"))
        row = g.distances_from(zero)
        return np.asarray([row[g.index[t]] for t in targets])

    prev = profile(radius)
    while True:
        radius *= 2
        if radius > cap:
            return prev, np.zeros(n_max, dtype=bool)
        cur = profile(radius)
        if np.max(prev - cur) < tol:
            return cur, np.ones(n_max, dtype=bool)
        prev = cur


def directional_constant(model: WeightModel, seeds, theta: Site, n_max: int,
                         dimension: int | None = None,
                         tol: float = 1e-9) -> DirectionalSeries:
    """The per-direction convergence series and its inf-of-means limit.

    Nonconverged distances are excluded from the means and counted; a
    series with more than 10% exclusions is flagged.
    """
    theta = tuple(theta)
    if all(t == 0 for t in theta):
        raise ValueError("direction must be nonzero")
    if n_max < 4:
        raise ValueError("n_max must be at least 4")
    d = dimension or len(theta)
    step = norm1(theta)
    rows = []
    flags = []
    for seed in sorted(seeds):
        env = Environment(model, seed=int(seed), dimension=d)
        vals, ok = _direction_profile(env, theta, n_max, tol)
        rows.append(vals)
        flags.append(ok)
    rows = np.asarray(rows)
    flags = np.asarray(flags)
    ks = np.arange(1, n_max + 1)
    means = np.empty(n_max)
    stderrs = np.empty(n_max)
    for i in range(n_max):
        col = rows[flags[:, i], i] / (ks[i] * step)
        if len(col) == 0:
            raise RuntimeError(
                f"no converged distances at k={ks[i]} along {theta}")
        means[i] = col.mean()
        stderrs[i] = col.std(ddof=1) / math.sqrt(len(col)) if len(col) > 1 else 0.0
    excluded = 1.0 - float(flags.mean())
    return DirectionalSeries(direction=theta, ks=ks, means=means,
                             stderrs=stderrs, excluded_fraction=excluded,
                             flagged=excluded > 0.10)


@dataclass(frozen=True)
class ShapeEstimate:
    directions: tuple[Site, ...]
    series: tuple[DirectionalSeries, ...]
    n_max: int
    n_seeds: int

    def constant(self, i: int) -> float:
        return self.series[i].estimate

    def unit_ball_vertices(self) -> np.ndarray:
        """Boundary points theta / L(theta) of the estimated unit ball."""
        pts = []
        for theta, s in zip(self.directions, self.series):
            scale = s.estimate * norm1(theta)
            pts.append(np.asarray(theta, dtype=float) / scale)
        return np.asarray(pts)

    @property
    def flagged(self) -> bool:
        return any(s.flagged for s in self.series)


def default_directions(d: int, richness: int = 2) -> list[Site]:
    """Primitive integer directions with coordinates up to the richness,
    spanning all axis sign combinations."""
    out = []
    seen = set()
    rng = range(-richness, richness + 1)
    from itertools import product

    for v in product(rng, repeat=d):
        if all(c == 0 for c in v):
            continue
        g = math.gcd(*[abs(c) for c in v])
        prim = tuple(c // g for c in v)
        if prim not in seen:
            seen.add(prim)
            out.append(prim)
    out.sort()
    return out


def estimate_shape(model: WeightModel, seeds, directions, n_max: int,
                   dimension: int | None = None,
                   tol: float = 1e-9) -> ShapeEstimate:
    directions = [tuple(t) for t in directions]
    d = dimension or len(directions[0])
    span = np.linalg.matrix_rank(np.asarray(directions))
    if span < d:
        raise ValueError("directions must span the lattice dimension")
    series = tuple(
        directional_constant(model, seeds, theta, n_max, dimension=d, tol=tol)
        for theta in directions)
    return ShapeEstimate(directions=tuple(directions), series=series,
                         n_max=n_max, n_seeds=len(list(seeds)))


# --------------------------------------------------------------------------
# maximal function and its tail


def maximal_function(env: Environment, window_radius: int) -> float:
    """max over 0 < |n| <= W of rho(0, n)/|n|, from one multi-target
    search on the box of radius 2W."""
    if window_radius < 1:
        raise ValueError("window radius must be at least 1")
    zero = (0,) * env.dimension
    g = BoxGraph(env, BoxRegion(zero, 2 * window_radius, "l1"))
    dist = g.distances_from(zero)
    best = 0.0
    for i, site in enumerate(g.sites):
        r = norm1(site)
        if 0 < r <= window_radius:
            best = max(best, dist[i] / r)
    return best


@dataclass(frozen=True)
class MaximalStats:
    window_radius: int
    values: np.ndarray          # per-seed Ms samples
    lambda_grid: np.ndarray

    def tail(self, lam: float) -> float:
        return float(np.mean(self.values >= lam))

    def tail_products(self, d: int) -> list[tuple[float, float, float]]:
        """Rows (lambda, empirical tail, lambda^d * tail)."""
        out = []
        for lam in self.lambda_grid:
            t = self.tail(lam)
            out.append((float(lam), t, float(lam ** d * t)))
        return out

    def headline(self, d: int) -> float:
        return max(p for _, _, p in self.tail_products(d))


def sample_maximal_stats(model: WeightModel, seeds, window_radius: int,
                         lambda_grid, dimension: int) -> MaximalStats:
    if np.min(np.asarray(lambda_grid, dtype=float)) < 1.0:
        raise ValueError("the tail grid starts at 1")
    vals = []
    for seed in sorted(seeds):
        env = Environment(model, seed=int(seed), dimension=dimension)
        vals.append(maximal_function(env, window_radius))
    return MaximalStats(window_radius=window_radius,
                        values=np.asarray(vals),
                        lambda_grid=np.asarray(lambda_grid, dtype=float))


# --------------------------------------------------------------------------
# the pointwise domination bound


def generator_sup_field(env: Environment, sites: list[Site]) -> np.ndarray:
    """f at each site: the largest weight among its 2d incident edges.

    This is the per-axis envelope sup_k max over both orientations; it
    dominates every one-step distance from the site, and the domination
    bound is monotone in f, so the inequality it feeds stays valid.
    """
    d = env.dimension
    arr = np.asarray(sites, dtype=np.int64)
    vals = np.full(len(sites), -np.inf)
    for k in range(d):
        fwd = env.edge_weights(arr, np.full(len(sites), k))
        back = env.edge_weights(
            arr - np.eye(d, dtype=np.int64)[k], np.full(len(sites), k))
        vals = np.maximum(vals, np.maximum(fwd, back))
    return vals


def _coordinate_subspace_sites(axes: tuple[int, ...], d: int,
                               max_norm: int) -> list[Site]:
    from itertools import product

    if not axes:
        return [(0,) * d]
    out = []
    rng = range(-max_norm, max_norm + 1)
    for vals in product(rng, repeat=len(axes)):
        if sum(abs(v) for v in vals) <= max_norm:
            site = [0] * d
            for a, v in zip(axes, vals):
                site[a] = v
            out.append(tuple(site))
    return out


def maximal_bound_rhs(env: Environment, n: Site, constant: float) -> float:
    """The domination bound for rho(0, n)/|n|: coordinate-subspace
    averages of the incident-edge envelope plus the weighted half-ball
    sum around n, scaled by the frozen family constant."""
    n = tuple(n)
    d = env.dimension
    N = norm1(n)
    if N == 0:
        raise ValueError("n must be nonzero")

    cache: dict[Site, float] = {}

    def f(sites: list[Site]) -> np.ndarray:
        missing = [s for s in sites if s not in cache]
        if missing:
            vals = generator_sup_field(env, missing)
            cache.update(zip(missing, vals))
        return np.asarray([cache[s] for s in sites])

    subspace_total = 0.0
    for dim_h in range(d + 1):
        for axes in combinations(range(d), dim_h):
            sites = _coordinate_subspace_sites(axes, d, 2 * N)
            subspace_total += float(np.sum(f(sites))) / N ** dim_h

    half_ball = [m for m in BoxRegion(n, N // 2, "l1").sites()
                 if m != n]
    if half_ball:
        weights = np.asarray([1.0 / norm1(tuple(a - b for a, b in zip(m, n)))
                              ** (d - 1) for m in half_ball])
        near_total = float(np.sum(f(half_ball) * weights))
    else:
        near_total = 0.0
    near_total += float(f([n])[0])
    return constant * (subspace_total + near_total / N)
