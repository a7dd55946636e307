"""Whitney decompositions and interior regions built from them.

Cubes are dyadic children of one power-of-two root cell, tracked by integer
coordinates so disjointness and adjacency are exact integer tests.  The keep
rule is the classical one: a cell survives when 4 diam(I) <= dist(4I, bdry),
measured with the exact per-shape rectangle distance.  A kept cell's parent
always failed that test, which pins dist(I, bdry) <= 16 diam(I), inside the
standard 40 diam envelope, without any extra pass.

Regions collect Whitney cubes around a boundary cube Q: the scale-and-distance
window W_Q^theta, its fattened union U_Q^theta, Carleson boxes over a subtree,
and sawtooth regions that stop at a disjoint family F.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .dyadic import DyadicGrid
from .errors import FamilyNotDisjoint, PreconditionViolated
from .geometry import Domain

LAMBDA = 1.0 / 32.0
FATTEN_LEVELS = {"I": 0, "I*": 1, "I**": 2, "I***": 3}


def theta0(dim: int) -> int:
    """Default region parameter: the hard floor plus discretization margin."""
    return math.ceil(6 + math.log2(dim)) + 2


def theta_floor(dim: int) -> int:
    return math.ceil(6 + math.log2(dim))


class WhitneyDecomposition:
    """Immutable set of interior Whitney cubes for one domain."""

    def __init__(self, domain, root_lo, root_side, levels, icoords, dist, dist4,
                 component, min_len, cutoff_hit, n_dropped_floor):
        self.domain = domain
        self.root_lo = root_lo
        self.root_side = float(root_side)
        self.level = np.asarray(levels, dtype=np.int32)
        self.icoord = np.asarray(icoords, dtype=np.int64)
        self.dist = np.asarray(dist, dtype=float)
        self.dist4 = np.asarray(dist4, dtype=float)
        self.component = np.asarray(component, dtype=np.int64)
        self.min_len = float(min_len)
        self.cutoff_hit = bool(cutoff_hit)
        self.n_dropped_floor = int(n_dropped_floor)
        self.lam = LAMBDA
        h = self.root_side * 2.0 ** (-self.level.astype(float))
        self.side = h
        self.lo = root_lo[None, :] + self.icoord * h[:, None]
        self.hi = self.lo + h[:, None]
        self.center_pt = self.lo + 0.5 * h[:, None]
        self._tree = None
        self._adj = None

    def __len__(self):
        return len(self.level)

    @property
    def dim(self):
        return self.icoord.shape[1]

    def diam(self, i=None):
        s = self.side if i is None else self.side[i]
        return s * math.sqrt(self.dim)

    def center_tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.center_pt)
        return self._tree

    def fattened(self, ids, level="I"):
        """Closed boxes of the requested fattening, (1 + k lambda) I."""
        k = FATTEN_LEVELS[level]
        ids = np.asarray(ids, dtype=int)
        pad = 0.5 * k * self.lam * self.side[ids]
        return self.lo[ids] - pad[:, None], self.hi[ids] + pad[:, None]

    def locate(self, x):
        """Id of the cube whose closed box contains x, or -1."""
        x = np.asarray(x, dtype=float)
        _, cand = self.center_tree().query(x, k=min(16, len(self)))
        for j in np.atleast_1d(cand):
            if np.all(self.lo[j] <= x) and np.all(x <= self.hi[j]):
                return int(j)
        # fall back to a full scan; the pad above misses only exotic layouts
        hit = np.flatnonzero(np.all(self.lo <= x, axis=1) & np.all(x <= self.hi, axis=1))
        return int(hit[0]) if len(hit) else -1

    def finest_intervals(self):
        """Integer cube extents at the finest level present, for exact tests."""
        L = int(self.level.max()) if len(self) else 0
        scale = 2 ** (L - self.level.astype(np.int64))
        return self.icoord * scale[:, None], (self.icoord + 1) * scale[:, None]

    def candidate_pairs(self, pad_factor=1.0):
        """All pairs close enough to possibly touch (each unordered pair once).

        Scans level against level so the query radius matches the pair of
        sizes instead of the global maximum."""
        ii, jj = [], []
        lv = np.unique(self.level)
        trees = {}
        index = {}
        for l in lv:
            sel = np.flatnonzero(self.level == l)
            index[int(l)] = sel
            trees[int(l)] = cKDTree(self.center_pt[sel])
        root_d = math.sqrt(self.dim)
        for la in lv:
            la = int(la)
            sa = self.root_side * 2.0 ** (-la)
            for lb in lv:
                lb = int(lb)
                if lb < la:
                    continue
                sb = self.root_side * 2.0 ** (-lb)
                r = 0.5 * (sa + sb) * root_d * pad_factor * 1.0001
                hits = trees[la].query_ball_tree(trees[lb], r)
                ga, gb = index[la], index[lb]
                for loc_i, js in enumerate(hits):
                    if not js:
                        continue
                    js = np.asarray(js, dtype=int)
                    if la == lb:
                        js = js[js > loc_i]
                        if not len(js):
                            continue
                    ii.append(np.full(len(js), ga[loc_i], dtype=np.int64))
                    jj.append(gb[js])
        if not ii:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        return np.concatenate(ii), np.concatenate(jj)

    def adjacency(self):
        """Pairs of touching cubes (closed boxes intersecting), exact."""
        if self._adj is not None:
            return self._adj
        ii, jj = self.candidate_pairs()
        a, b = self.finest_intervals()
        touch = np.all(np.maximum(a[ii], a[jj]) <= np.minimum(b[ii], b[jj]), axis=1)
        self._adj = list(zip(ii[touch].tolist(), jj[touch].tolist()))
        return self._adj

    def to_rows(self):
        """Export rows: corner coordinates, side length, boundary distance."""
        return np.concatenate([self.lo, self.side[:, None], self.dist[:, None]], axis=1)


def build_whitney(domain: Domain, bbox=None, min_len: float = None) -> WhitneyDecomposition:
    """Dyadic Whitney decomposition of the domain interior inside a working box."""
    if bbox is None:
        lo, hi = domain.bbox()
    else:
        lo, hi = np.asarray(bbox[0], dtype=float), np.asarray(bbox[1], dtype=float)
    if min_len is None:
        min_len = domain.diam_boundary() * 2.0 ** (-8)
    if min_len <= 0:
        raise PreconditionViolated("min_len must be positive")
    ext = float(np.max(hi - lo))
    root_side = 2.0 ** math.ceil(math.log2(ext * 1.001))
    root_lo = 0.5 * (lo + hi) - 0.5 * root_side
    d = domain.dim

    levels, icoords, dists, dist4s, comps = [], [], [], [], []
    state = {"cutoff": False, "dropped": 0}
    offsets = np.array(np.meshgrid(*([[0, 1]] * d), indexing="ij")).reshape(d, -1).T

    def visit(level, ic):
        h = root_side * 2.0 ** (-level)
        clo = root_lo + ic * h
        chi = clo + h
        c = clo + 0.5 * h
        dist_i = domain.rect_boundary_distance(clo, chi)
        inside = bool(domain.contains(c[None])[0])
        if dist_i > 0.0 and not inside:
            return  # the whole cell sits in the complement
        d4 = domain.rect_boundary_distance(c - 2.0 * h, c + 2.0 * h)
        if 4.0 * h * math.sqrt(d) <= d4:
            if inside:
                levels.append(level)
                icoords.append(ic.copy())
                dists.append(dist_i)
                dist4s.append(d4)
                comps.append(int(domain.component_of(c[None])[0]))
            return
        if h / 2.0 < min_len:
            state["cutoff"] = True
            state["dropped"] += 1
            return
        for off in offsets:
            visit(level + 1, 2 * ic + off)

    visit(0, np.zeros(d, dtype=np.int64))
    if not levels:
        return WhitneyDecomposition(
            domain, root_lo, root_side, np.zeros(0, dtype=int),
            np.zeros((0, d), dtype=np.int64), np.zeros(0), np.zeros(0),
            np.zeros(0, dtype=int), min_len, state["cutoff"], state["dropped"],
        )
    return WhitneyDecomposition(
        domain, root_lo, root_side, levels, np.array(icoords), dists, dist4s,
        comps, min_len, state["cutoff"], state["dropped"],
    )


# ---------------------------------------------------------------------------
# verification


@dataclass
class WhitneyReport:
    ok: bool
    n_cubes: int
    frac_4_40: float
    worst_upper: float
    neighbor_ratio_ok: bool
    worst_ratio: float
    disjoint: bool
    fattening_ok: bool
    cutoff_hit: bool

    def __bool__(self):
        return self.ok


def verify_whitney(W: WhitneyDecomposition) -> WhitneyReport:
    """Exact recheck of the 4/40 inequalities and the pairwise structure.

    Pairwise checks: interiors disjoint, touching cubes within a factor 4 in
    side, and fattened interiors int(I*) meet exactly when the closed cubes
    touch."""
    n = len(W)
    diam = W.diam()
    ok_both = np.zeros(n, dtype=bool)
    worst_upper = 0.0
    for i in range(n):
        d4 = W.domain.rect_boundary_distance(
            W.center_pt[i] - 2.0 * W.side[i], W.center_pt[i] + 2.0 * W.side[i]
        )
        di = W.domain.rect_boundary_distance(W.lo[i], W.hi[i])
        ok_both[i] = (4.0 * diam[i] <= d4 <= di + 1e-15) and di <= 40.0 * diam[i]
        worst_upper = max(worst_upper, di / diam[i])
    frac = float(ok_both.mean()) if n else 1.0
    ii, jj = W.candidate_pairs(pad_factor=1.0 + W.lam)
    a, b = W.finest_intervals()
    amax = np.maximum(a[ii], a[jj])
    bmin = np.minimum(b[ii], b[jj])
    touch = np.all(amax <= bmin, axis=1)
    disjoint = not bool(np.any(np.all(amax < bmin, axis=1)))
    pad = 0.5 * W.lam * W.side
    star = np.all(
        np.maximum(W.lo[ii] - pad[ii, None], W.lo[jj] - pad[jj, None])
        < np.minimum(W.hi[ii] + pad[ii, None], W.hi[jj] + pad[jj, None]),
        axis=1,
    )
    fattening_ok = not bool(np.any(star != touch))
    r = W.side[ii[touch]] / W.side[jj[touch]]
    r = np.maximum(r, 1.0 / r)
    worst_ratio = float(r.max()) if len(r) else 1.0
    ratio_ok = worst_ratio <= 4.0
    ok = frac == 1.0 and ratio_ok and disjoint and fattening_ok
    return WhitneyReport(
        ok=ok,
        n_cubes=n,
        frac_4_40=frac,
        worst_upper=worst_upper,
        neighbor_ratio_ok=ratio_ok,
        worst_ratio=worst_ratio,
        disjoint=disjoint,
        fattening_ok=fattening_ok,
        cutoff_hit=W.cutoff_hit,
    )


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Region:
    """A set of Whitney cube ids with a fattening level and its provenance."""

    ids: tuple
    level: str
    q_id: int
    theta: int
    cutoff_flag: bool
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.ids)

    def boxes(self, W: WhitneyDecomposition):
        return W.fattened(np.asarray(self.ids, dtype=int), self.level)

    def contains_point(self, W: WhitneyDecomposition, x):
        if not self.ids:
            return False
        lo, hi = self.boxes(W)
        x = np.asarray(x, dtype=float)
        return bool(np.any(np.all(lo <= x, axis=1) & np.all(x <= hi, axis=1)))


def _cube_sample_dist(W, ids, pts):
    """dist(I, Q) measured between the cube hull and Q's sample hull."""
    out = np.empty(len(ids))
    block = max(1, 2_000_000 // max(1, len(pts) * W.dim))
    for s in range(0, len(ids), block):
        sel = ids[s: s + block]
        g = np.maximum(
            np.maximum(W.lo[sel][:, None, :] - pts[None], pts[None] - W.hi[sel][:, None, :]),
            0.0,
        )
        out[s: s + len(sel)] = np.sqrt((g * g).sum(axis=2).min(axis=1))
    return out


def whitney_region(grid: DyadicGrid, W: WhitneyDecomposition, q: int, theta: int,
                   level: str = "I*") -> Region:
    """W_Q^theta members, fattened at the requested level (default builds U_Q)."""
    if theta < theta_floor(W.dim):
        raise PreconditionViolated(f"theta must be at least {theta_floor(W.dim)}")
    if level not in FATTEN_LEVELS:
        raise PreconditionViolated(f"unknown fattening level {level!r}")
    ell_q = grid.ell(q)
    lo_s, hi_s = 2.0 ** (-theta) * ell_q, 2.0 ** theta * ell_q
    scale_ok = np.flatnonzero((W.side >= lo_s * (1 - 1e-12)) & (W.side <= hi_s * (1 + 1e-12)))
    if len(scale_ok):
        # prefilter by center distance before the exact hull test
        x_q = grid.center[q]
        reach = hi_s + W.diam(scale_ok) / 2.0 + grid.Xi * grid.radius(q)
        near = scale_ok[np.linalg.norm(W.center_pt[scale_ok] - x_q[None], axis=1) <= reach]
        pts = grid.points[grid.sample_lo[q]: grid.sample_hi[q]]
        dq = _cube_sample_dist(W, near, pts)
        members = near[dq <= hi_s * (1 + 1e-12)]
    else:
        members = np.array([], dtype=int)
    flag = W.cutoff_hit and lo_s < W.min_len
    return Region(tuple(int(i) for i in members), level, int(q), int(theta), flag)


def carleson_box(grid: DyadicGrid, W: WhitneyDecomposition, q: int, theta: int,
                 level: str = "I*") -> Region:
    """T_Q^theta: union of U_{Q'} over the subtree below Q."""
    ids = set()
    flag = False
    for qp in grid.descendants(q):
        r = whitney_region(grid, W, int(qp), theta, level)
        ids.update(r.ids)
        flag |= r.cutoff_flag
    return Region(tuple(sorted(ids)), level, int(q), int(theta), flag)


def sawtooth(grid: DyadicGrid, W: WhitneyDecomposition, F, q: int, theta: int,
             level: str = "I*") -> Region:
    """Sawtooth region: Whitney regions of D_Q cubes not below any F-cube."""
    F = [int(f) for f in F]
    for i, f1 in enumerate(F):
        for f2 in F[i + 1:]:
            if grid.is_ancestor(f1, f2) or grid.is_ancestor(f2, f1):
                raise FamilyNotDisjoint("stopping cubes must be pairwise disjoint")
    blocked = np.zeros(grid.n_cubes, dtype=bool)
    for f in F:
        if grid.is_ancestor(f, q) or f == q:
            # Q itself is at or below a stopping cube: nothing survives
            return Region((), level, int(q), int(theta), False)
        blocked[f: grid.subtree_end[f]] = True
    ids = set()
    flag = False
    for qp in grid.descendants(q):
        if blocked[qp]:
            continue
        r = whitney_region(grid, W, int(qp), theta, level)
        ids.update(r.ids)
        flag |= r.cutoff_flag
    return Region(tuple(sorted(ids)), level, int(q), int(theta), flag)


# ---------------------------------------------------------------------------
# covering and overlap certificate


def _ball_probes(center, radius, dim, per_axis=7):
    s = np.linspace(-radius, radius, per_axis)
    grids = np.meshgrid(*([s] * dim), indexing="ij")
    pts = np.stack([v.ravel() for v in grids], axis=1)
    pts = pts[(pts ** 2).sum(axis=1) <= radius * radius]
    return center[None] + pts


def overlap_certificate(grid: DyadicGrid, W: WhitneyDecomposition, points, tau: float,
                        c: float, theta_max: int = None):
    """Smallest theta whose Whitney regions cover every ball
    B(P_Q, (1-tau) delta(P_Q)), plus the measured maximal ball overlap."""
    if not (0 < tau < 0.5 and 0 < c < 0.5):
        raise PreconditionViolated("tau and c must lie in (0, 1/2)")
    tf = theta_floor(W.dim)
    if theta_max is None:
        theta_max = theta0(W.dim) + 4
    points = {int(q): np.asarray(p, dtype=float) for q, p in points.items()}
    deltas = {}
    for q, p in points.items():
        delta = float(W.domain.boundary_distance(p[None])[0])
        ell_q = grid.ell(q)
        if delta < c * ell_q * (1 - 1e-9):
            raise PreconditionViolated(f"point for cube {q} too close to the boundary")
        if np.linalg.norm(p - grid.center[q]) > 2.0 * grid.Xi * grid.radius(q) * (1 + 1e-9):
            raise PreconditionViolated(f"point for cube {q} escapes its cube ball")
        deltas[q] = delta
    chosen = None
    for theta in range(tf, theta_max + 1):
        ok = True
        for q, p in points.items():
            reg = whitney_region(grid, W, q, theta, level="I")
            probes = _ball_probes(p, (1.0 - tau) * deltas[q], W.dim)
            if not len(reg.ids):
                ok = False
                break
            lo, hi = reg.boxes(W)
            covered = np.zeros(len(probes), dtype=bool)
            for b in range(len(lo)):
                covered |= np.all(probes >= lo[b][None], axis=1) & np.all(
                    probes <= hi[b][None], axis=1
                )
            if not covered.all():
                ok = False
                break
        if ok:
            chosen = theta
            break
    if chosen is None:
        raise PreconditionViolated(
            f"no theta up to {theta_max} covers all supplied balls"
        )
    # measured overlap of the balls on probe lattices
    qs = sorted(points)
    centers = np.array([points[q] for q in qs])
    radii = np.array([(1.0 - tau) * deltas[q] for q in qs])
    C = 1
    for row, q in enumerate(qs):
        probes = _ball_probes(centers[row], radii[row], W.dim)
        d2 = ((probes[:, None, :] - centers[None]) ** 2).sum(axis=2)
        counts = (d2 <= (radii[None] ** 2) * (1 + 1e-12)).sum(axis=1)
        C = max(C, int(counts.max()))
    return chosen, C


def kappa_containment(grid: DyadicGrid, W: WhitneyDecomposition, q: int, theta: int,
                      kappa1: float = 0.25, n_probe: int = 9):
    """Probe-net check of kappa1 B_Q cap Omega inside T_Q^theta inside kappa0 B_Q.

    Returns (inner_ok, measured_kappa0): whether every interior probe of the
    small ball lies in the Carleson box, and the smallest dilation of B_Q
    containing the box."""
    box = carleson_box(grid, W, q, theta)
    x_q = grid.center[q]
    r_q = grid.radius(q)
    probes = _ball_probes(x_q, kappa1 * r_q, W.dim, per_axis=n_probe)
    blo, bhi = W.domain.bbox()
    inside = (
        W.domain.contains(probes)
        & np.all(probes >= blo[None], axis=1)
        & np.all(probes <= bhi[None], axis=1)
    )
    # skip probes inside the cutoff collar: coverage by kept cubes is only
    # guaranteed once a dyadic side above min_len fits under the keep rule
    deep = W.domain.boundary_distance(probes) > 16.0 * math.sqrt(W.dim) * W.min_len
    inner_ok = True
    for p in probes[inside & deep]:
        if not box.contains_point(W, p):
            inner_ok = False
            break
    if box.ids:
        lo, hi = box.boxes(W)
        far = np.maximum(np.abs(lo - x_q[None]), np.abs(hi - x_q[None]))
        kappa0 = float(np.sqrt((far * far).sum(axis=1)).max() / r_q)
    else:
        kappa0 = 0.0
    return inner_ok, kappa0
