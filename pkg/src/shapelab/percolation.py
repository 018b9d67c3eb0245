"""The random semimetric: boxed shortest-path weights, geodesics, balls,
and the finite-site embedding that realizes distances as sup-norms of
additive difference tables.

The infimum over all lattice paths is approximated by computation inside
a finite box.  Boxed values only decrease as the box grows, so truncation
is auditable: refinement doubles the box radius until two successive
values agree within a tolerance, and the outcome carries an explicit
converged flag.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra

from .environment import Environment
from .lattice import BoxRegion, LatticePath, Site, norm1, sub


class ConvergenceError(RuntimeError):
    """Raised when a distance refinement hits its radius cap while the
    caller required a converged value."""


@dataclass(frozen=True)
class DistanceResult:
    value: float
    box_radius_used: int
    converged: bool


@dataclass(frozen=True)
class Geodesic:
    path: LatticePath
    total_weight: float


def _midpoint_box(m: Site, n: Site, radius: int) -> BoxRegion:
    center = tuple((a + b) // 2 for a, b in zip(m, n))
    return BoxRegion(center, radius, "l1")


class BoxGraph:
    """Weighted nearest-neighbor graph on the sites of one box."""

    def __init__(self, env: Environment, box: BoxRegion):
        self.env = env
        self.box = box
        self.sites = box.sites()  # lexicographic, deterministic
        self.index = {s: i for i, s in enumerate(self.sites)}
        arr = np.asarray(self.sites, dtype=np.int64)
        d = env.dimension
        rows, cols, bases, axes = [], [], [], []
        for k in range(d):
            shifted = arr.copy()
            shifted[:, k] += 1
            for i in range(len(self.sites)):
                j = self.index.get(tuple(shifted[i]))
                if j is not None:
                    rows.append(i)
                    cols.append(j)
                    bases.append(self.sites[i])
                    axes.append(k)
        if bases:
            w = env.edge_weights(np.asarray(bases, dtype=np.int64),
                                 np.asarray(axes, dtype=np.int64))
        else:
            w = np.zeros(0)
        n = len(self.sites)
        # explicit zeros must stay stored: zero-weight edges are legal and
        # scipy's sparse dijkstra honors stored zeros as real edges
        self._graph = csr_matrix(
            (w, (np.asarray(rows, dtype=np.int64),
                 np.asarray(cols, dtype=np.int64))), shape=(n, n))

    def distances_from(self, source: Site) -> np.ndarray:
        """Exact shortest-path weights from source to every box site."""
        if source not in self.index:
            raise ValueError(f"source {source} outside box {self.box}")
        return _csgraph_dijkstra(self._graph, directed=False,
                                 indices=self.index[source])

    def distance(self, source: Site, target: Site) -> float:
        if target not in self.index:
            raise ValueError(f"target {target} outside box {self.box}")
        val = self.distances_from(source)[self.index[target]]
        if not math.isfinite(val):
            raise RuntimeError("box disconnected; should be impossible for "
                               "ball-shaped regions")
        return float(val)


def distance(env: Environment, m: Site, n: Site, box_radius: int,
             box: BoxRegion | None = None) -> DistanceResult:
    """Exact minimum path weight between m and n among paths confined to
    the box (canonically, the ell-1 ball of the given radius around the
    floor midpoint of m and n).

    The search always runs from the lexicographically smaller endpoint, so
    swapping m and n reproduces the identical arithmetic and symmetry
    holds bit for bit."""
    m, n = tuple(m), tuple(n)
    if box is None:
        box = _midpoint_box(m, n, box_radius)
    if not (box.contains(m) and box.contains(n)):
        raise ValueError("query endpoints must lie inside the box")
    src, dst = (m, n) if m <= n else (n, m)
    value = BoxGraph(env, box).distance(src, dst)
    return DistanceResult(value=value, box_radius_used=box.radius,
                          converged=False)


def distance_converged(env: Environment, m: Site, n: Site, tol: float = 1e-9,
                       radius_cap: int | None = None) -> DistanceResult:
    """Refine the boxed distance by doubling the radius until two
    successive values agree within tol.  Values only decrease under
    refinement, so agreement certifies stabilization at this scale."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    m, n = tuple(m), tuple(n)
    gap = norm1(sub(n, m))
    if gap == 0:
        return DistanceResult(0.0, 0, True)
    radius = 2 * gap
    if radius_cap is None:
        radius_cap = 32 * gap
    prev = distance(env, m, n, radius).value
    while True:
        radius *= 2
        if radius > radius_cap:
            return DistanceResult(prev, radius // 2, False)
        cur = distance(env, m, n, radius).value
        if prev - cur < tol:
            return DistanceResult(cur, radius, True)
        prev = cur


def _lex_dijkstra(env: Environment, box: BoxRegion, source: Site):
    """Reference Dijkstra with lexicographic tie-breaking, used for
    geodesic reconstruction.  Returns (dist, pred) dicts."""
    dist: dict[Site, float] = {source: 0.0}
    pred: dict[Site, Site | None] = {source: None}
    done: set[Site] = set()
    heap: list[tuple[float, Site]] = [(0.0, source)]
    d = env.dimension
    while heap:
        du, u = heapq.heappop(heap)
        if u in done or du > dist.get(u, math.inf):
            continue
        done.add(u)
        for k in range(d):
            for sign in (1, -1):
                v = tuple(c + (sign if j == k else 0)
                          for j, c in enumerate(u))
                if not box.contains(v):
                    continue
                base = u if sign == 1 else v
                w = env.edge_weight((base, k))
                alt = du + w
                old = dist.get(v, math.inf)
                if alt < old or (alt == old and v not in done
                                 and pred.get(v) is not None
                                 and u < pred[v]):
                    dist[v] = alt
                    pred[v] = u
                    heapq.heappush(heap, (alt, v))
    return dist, pred


def geodesic(env: Environment, m: Site, n: Site, box_radius: int,
             box: BoxRegion | None = None) -> Geodesic:
    """A witness path achieving the boxed distance, with deterministic
    lexicographic tie-breaking among equally short predecessors.  The
    weight is accumulated from the lexicographically smaller endpoint,
    matching distance() exactly; the returned path runs from m to n."""
    m, n = tuple(m), tuple(n)
    if box is None:
        box = _midpoint_box(m, n, box_radius)
    if not (box.contains(m) and box.contains(n)):
        raise ValueError("query endpoints must lie inside the box")
    src, dst = (m, n) if m <= n else (n, m)
    dist, pred = _lex_dijkstra(env, box, src)
    if dst not in dist:
        raise RuntimeError("target unreachable inside box")
    verts = [dst]
    while verts[-1] != src:
        verts.append(pred[verts[-1]])
    verts.reverse()
    if verts[0] != m:
        verts.reverse()
    return Geodesic(path=LatticePath(verts), total_weight=dist[dst])


def ball(env: Environment, center: Site, t: float, box_radius: int) -> list[Site]:
    """All box sites within semimetric distance t of the center, sorted."""
    if t < 0:
        raise ValueError("radius t must be nonnegative")
    center = tuple(center)
    box = BoxRegion(center, box_radius, "l1")
    g = BoxGraph(env, box)
    dist = g.distances_from(center)
    return sorted(g.sites[i] for i in np.nonzero(dist <= t)[0])


def sites_to_csv(sites: list[Site]) -> str:
    """CSV text for site lists (balls, geodesic vertex sequences)."""
    if not sites:
        return ""
    d = len(sites[0])
    lines = [",".join(f"x_{k}" for k in range(d))]
    lines += [",".join(str(c) for c in s) for s in sites]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# structure embedding on finite site sets


@dataclass(frozen=True)
class StructureEmbedding:
    """Distances on a finite site set realized as sup-norms of the
    difference tables s(y,y') = rho(y, .) - rho(., y')."""

    sites: tuple[Site, ...]
    dist: np.ndarray  # symmetric |Y| x |Y| matrix
    box_radius_used: int

    def vector(self, i: int, j: int) -> np.ndarray:
        """The table y'' -> rho(y_i, y'') - rho(y'', y_j)."""
        return self.dist[i, :] - self.dist[:, j]

    def sup_norm(self, i: int, j: int) -> float:
        return float(np.max(np.abs(self.vector(i, j))))

    def to_json(self) -> str:
        return json.dumps({
            "sites": [list(s) for s in self.sites],
            "dist": self.dist.tolist(),
            "box_radius_used": self.box_radius_used,
        }, separators=(",", ":"))


def structure_embed(env: Environment, sites: list[Site], tol: float = 1e-9,
                    radius_cap: int | None = None) -> StructureEmbedding:
    """Pairwise converged distances on a common box, packaged as the
    embedding tables.  Raises ConvergenceError if the refinement cap is hit
    before all pairwise values stabilize."""
    sites = [tuple(s) for s in sites]
    if len(sites) < 1:
        raise ValueError("need at least one site")
    if len(set(sites)) != len(sites):
        raise ValueError("sites must be distinct")
    lo = tuple(min(s[k] for s in sites) for k in range(env.dimension))
    hi = tuple(max(s[k] for s in sites) for k in range(env.dimension))
    center = tuple((a + b) // 2 for a, b in zip(lo, hi))
    spread = max(1, max(norm1(sub(s, center)) for s in sites))
    radius = 2 * spread
    if radius_cap is None:
        radius_cap = 32 * spread

    def all_pairs(r: int) -> np.ndarray:
        box = BoxRegion(center, r, "l1")
        g = BoxGraph(env, box)
        rows = {s: g.distances_from(s) for s in sites}
        out = np.zeros((len(sites), len(sites)))
        for i, s in enumerate(sites):
            for j, t in enumerate(sites):
                # evaluate from the lexicographically smaller endpoint so
                # the matrix is symmetric bit for bit
                src, dst = (s, t) if s <= t else (t, s)
                out[i, j] = rows[src][g.index[dst]]
        return out

    prev = all_pairs(radius)
    while True:
        radius *= 2
        if radius > radius_cap:
            raise ConvergenceError(
                f"pairwise distances did not stabilize within radius cap "
                f"{radius_cap}")
        cur = all_pairs(radius)
        if np.max(prev - cur) < tol:
            return StructureEmbedding(sites=tuple(sites), dist=cur,
                                      box_radius_used=radius)
        prev = cur
