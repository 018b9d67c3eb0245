"""Construction of the spread-out path family behind lattice.build_path_family.

Everything here works in a canonical frame: the chain's axes are reordered
so the transversal axis comes last with a positive target coordinate.  In
that frame the target is (p, M) for d=2 or (p1, p2, M) for d=3, with M
carrying more than half the ell-1 mass N; the half-ball around the target
has radius R = floor(N/2).

d=2 is closed form.  Track i marches vertically at a distinct cross offset
c_i and collapses onto the target along the integer quota ray
xi(r) = round(2*c_i*r/N) clamped at c_i, r being the ell-1 distance to the
target.  Exactly one coordinate advances per unit of r, so trajectories
are elementary paths; quota rays are saturated (hence pairwise disjoint)
everywhere outside the half-ball, and inside it at most ~N/(2r) + 1 tracks
share a site.

d=3 assigns each track a column in the ell-1 ball of radius R+1 of the
cross plane.  The sphere of radius R+1 around the target is the packing
bottleneck: its sites on or below the target level are exactly the column
tails (c, u) with |c| + u = R+1, so every track must cross it at its own
tail, which the per-axis quota pacing achieves.  When N^2 exceeds the
number of such tails (only N in {7, 8} at desk scale), the excess tracks
become "hooks" that rise above the target level, travel outward at
negative u over the bottleneck, and descend a personal column on the
shell R+2.  The exhaustive audit in the test suite is the correctness
authority for the validated grid d in {2, 3}, |n| <= 8.
"""

from __future__ import annotations

from .lattice import LatticePath, PathFamily, Site


def _balanced(i: int) -> int:
    # 0, 1, -1, 2, -2, ...
    return (i + 1) // 2 * (1 if i % 2 else -1) if i else 0


def _sign(x: int) -> int:
    return (x > 0) - (x < 0)


def _span(a: int, b: int) -> list[int]:
    step = 1 if b >= a else -1
    return list(range(a, b + step, step))


# --------------------------------------------------------------------------
# frame mapping


def _to_canonical(n: Site, chain: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    coords = tuple(n[a] for a in chain)
    s = _sign(coords[-1]) or 1
    return coords[:-1] + (abs(coords[-1]),), s


def _from_canonical(site: tuple[int, ...], chain: tuple[int, ...], s: int) -> Site:
    d = len(chain)
    out = [0] * d
    for k, axis in enumerate(chain):
        out[axis] = site[k] if k < d - 1 else s * site[k]
    return tuple(out)


def build(n: Site, chain: tuple[int, ...]) -> PathFamily:
    d = len(n)
    canon, s = _to_canonical(n, chain)
    if d == 1:
        paths = [[(x,) for x in _span(0, canon[0])]]
        indices = [()]
    elif d == 2:
        paths, indices = _build_2d(canon[0], canon[1])
    else:
        paths, indices = _build_3d(canon[0], canon[1], canon[2])
    mapped = tuple(
        LatticePath([_from_canonical(v, chain, s) for v in p]) for p in paths)
    return PathFamily(target=n, chain_axes=chain, paths=mapped,
                      indices=tuple(indices))


# --------------------------------------------------------------------------
# d = 2


def _quota_offset(c: int, r: int, N: int) -> int:
    """Signed cross offset of track c at distance r from the target:
    round(2*c*r/N) clamped to c.  Saturates no later than r = floor(N/2)."""
    if c == 0:
        return 0
    mag = min((4 * abs(c) * r + N) // (2 * N), abs(c))
    return _sign(c) * mag


def _build_2d(p: int, M: int):
    N = abs(p) + M
    paths = []
    indices = []
    for i in range(N):
        c = _balanced(i)
        traj = []
        r = 0
        while True:
            xi = _quota_offset(c, r, N)
            u = r - abs(xi)
            traj.append((p + xi, M - u))
            if u == M:
                break
            r += 1
        entry = p + c
        spread = [(x, 0) for x in _span(0, entry)]
        paths.append(spread[:-1] + traj[::-1])
        indices.append((i,))
    return paths, indices


# --------------------------------------------------------------------------
# d = 3

_RAYS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def _rot90(d1: int, d2: int) -> tuple[int, int]:
    return (-d2, d1)


class _Family3D:
    def __init__(self, p1: int, p2: int, M: int):
        self.p = (p1, p2)
        self.M = M
        self.N = abs(p1) + abs(p2) + M
        self.R = self.N // 2
        self.bound = 2 * self.N

    def _site(self, xi1: int, xi2: int, u: int) -> tuple[int, int, int]:
        # offsets relative to the target; u counts levels below it
        return (self.p[0] + xi1, self.p[1] + xi2, self.M - u)

    def columns(self) -> list[tuple[int, int]]:
        K = self.R + 1
        ball = [(a, b) for a in range(-K, K + 1) for b in range(-K, K + 1)
                if abs(a) + abs(b) <= K]
        ball.sort(key=lambda c: (abs(c[0]) + abs(c[1]), c))
        return ball[: self.N ** 2]

    def hook_slots(self) -> list[dict]:
        """Hook geometry: rise to level -h over the target, run outward
        along a ray, then descend a personal column on the cross shell
        R+2.  Height is capped so the apex respects the 2N containment and
        the shared rise stays inside the half-ball."""
        out = []
        hmax = min(self.N - self.R - 2, self.R)
        for h in range(1, hmax + 1):
            for ray_idx, (d1, d2) in enumerate(_RAYS):
                k = h - 1
                l1, l2 = _rot90(d1, d2)
                reach = self.R + 2 - k
                pos = (d1 * reach + l1 * k, d2 * reach + l2 * k)
                out.append({"h": h, "ray": (d1, d2), "reach": reach,
                            "k": k, "pos": pos})
        return out

    def hook_trajectory(self, slot) -> list[tuple[int, int, int]]:
        """Hook sites from the target outward to its hyperplane entry."""
        h, (d1, d2) = slot["h"], slot["ray"]
        k, reach = slot["k"], slot["reach"]
        l1, l2 = _rot90(d1, d2)
        traj = [(0, 0, 0)]
        traj += [(0, 0, -i) for i in range(1, h + 1)]
        traj += [(d1 * x, d2 * x, -h) for x in range(1, reach + 1)]
        traj += [(d1 * reach + l1 * i, d2 * reach + l2 * i, -h)
                 for i in range(1, k + 1)]
        pos = slot["pos"]
        traj += [(pos[0], pos[1], u) for u in range(-h + 1, self.M + 1)]
        return traj

    def build(self):
        N, M, R = self.N, self.M, self.R
        cols = self.columns()
        n_hooks = N * N - len(cols)
        slots = self.hook_slots()
        if n_hooks > len(slots):
            raise ValueError(
                f"cannot construct the d=3 family for |n|={N}: "
                f"{n_hooks} overshoot tracks needed, {len(slots)} slots "
                "available (validated range is |n| <= 8)")

        # count-one bookkeeping outside the half-ball; inside it sharing
        # is free and only enters the measured near-target constant
        owner: dict[tuple[int, int, int], int] = {}

        def claim(xi1, xi2, u, who):
            if abs(xi1) + abs(xi2) + abs(u) <= R:
                return
            site = (xi1, xi2, u)
            if owner.setdefault(site, who) != who:
                raise AssertionError(
                    f"multiplicity clash at offset {site} of target "
                    f"{self._site(0, 0, 0)}")

        trajectories = []
        for tid, c in enumerate(cols):
            trajectories.append(self._normal_trajectory(c, tid, claim))
        for i in range(n_hooks):
            traj = self.hook_trajectory(slots[i])
            tid = len(cols) + i
            for xi1, xi2, u in traj[1:]:
                if u < M:  # hyperplane entry itself is exempt
                    claim(xi1, xi2, u, tid)
            trajectories.append(traj)

        entries = [self._site(*traj[-1])[:2] for traj in trajectories]
        spreads = self._plan_spreads(entries)

        paths = []
        for spread, traj in zip(spreads, trajectories):
            absolute = [self._site(*o) for o in traj]
            for x, y, t in absolute:
                if abs(x) + abs(y) + abs(t) > self.bound:
                    raise AssertionError(
                        f"containment violated at {(x, y, t)}")
            paths.append(spread[:-1] + absolute[::-1])

        indices = [(j1, j2) for j1 in range(N) for j2 in range(N)]
        return paths, indices

    def _normal_trajectory(self, c, tid, claim):
        """Quota-paced staircase from the target to the column tail at the
        sphere R+1, then straight up the column to the hyperplane."""
        N, M, R = self.N, self.M, self.R
        u_tail = R + 1 - abs(c[0]) - abs(c[1])
        xi1 = xi2 = u = 0
        traj = [(0, 0, 0)]
        for r in range(1, R + 2):
            lags = []
            if abs(xi1) < abs(c[0]) or (c[0] == 0) != (xi1 == 0):
                lags.append((abs(_quota_offset(c[0], r, N)) - abs(xi1), 0))
            if abs(xi2) < abs(c[1]):
                lags.append((abs(_quota_offset(c[1], r, N)) - abs(xi2), 1))
            ideal_u = max(0, r - abs(_quota_offset(c[0], r, N))
                          - abs(_quota_offset(c[1], r, N)))
            if u < u_tail:
                lags.append((ideal_u - u, 2))
            lags.sort(key=lambda t: (-t[0], t[1]))
            move = lags[0][1]
            if move == 0:
                xi1 += _sign(c[0] - xi1)
            elif move == 1:
                xi2 += _sign(c[1] - xi2)
            else:
                u += 1
            claim(xi1, xi2, u, tid)
            traj.append((xi1, xi2, u))
        if (xi1, xi2) != c or u != u_tail:
            raise AssertionError(f"track {c} missed its tail")
        for uu in range(u_tail + 1, M + 1):
            claim(c[0], c[1], uu, tid)
            traj.append((c[0], c[1], uu))
        return traj

    def _plan_spreads(self, entries):
        """Hyperplane staircases from the origin to each entry point.

        Vertical rides are budgeted at N per line of the first chain axis;
        overflow tracks detour over a fresh line so the nested-subspace
        multiplicity bound keeps holding.
        """
        N = self.N
        riders: dict[int, int] = {}
        plans: list[tuple[int, tuple[int, int]]] = []

        by_line: dict[int, list[int]] = {}
        for i, e in enumerate(entries):
            by_line.setdefault(e[0], []).append(i)
        choice: dict[int, int | None] = {}
        for line, ids in by_line.items():
            ids.sort(key=lambda i: (abs(entries[i][1]), entries[i][1]))
            for rank, i in enumerate(ids):
                if rank < N:
                    choice[i] = None
                    riders[line] = riders.get(line, 0) + 1
                else:
                    choice[i] = -1  # needs a detour line

        detour_line = None
        if any(v == -1 for v in choice.values()):
            v = 0
            while detour_line is None:
                for cand in sorted({-v, v}):
                    if riders.get(cand, 0) + sum(
                            1 for x in choice.values() if x == -1) <= N \
                            and cand not in by_line:
                        detour_line = cand
                        break
                v += 1

        spreads = []
        for i, e in enumerate(entries):
            if choice[i] is None:
                sp = [(x, 0, 0) for x in _span(0, e[0])]
                sp += [(e[0], y, 0) for y in _span(0, e[1])][1:]
            else:
                b = detour_line
                sp = [(x, 0, 0) for x in _span(0, b)]
                sp += [(b, y, 0) for y in _span(0, e[1])][1:]
                sp += [(x, e[1], 0) for x in _span(b, e[0])][1:]
            spreads.append(sp)
        return spreads


def _build_3d(p1: int, p2: int, M: int):
    return _Family3D(p1, p2, M).build()
