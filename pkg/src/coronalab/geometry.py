"""Domains with exact distance oracles and exactly weighted boundary clouds.

Every domain built here knows three things exactly: whether a point is inside,
how far a point (or an axis-aligned box) is from the boundary, and the surface
measure of a boundary ball.  The supported shapes are balls, boxes, half-space
slabs, Lipschitz supergraphs (dimension 2), the four-corner unions, and
complements of finite Cantor iterates.  Boundary samplers quantize per-piece
sample counts to powers of two so the self-similar cell constructions sit
exactly on sample boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    CorkscrewNotFound,
    OverlappingPieces,
    UnsupportedDimension,
)

_TWO_PI = 2.0 * math.pi


def _as_points(X, dim: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {X.shape}")
    return X


def _pow2_count(length: float, h: float) -> int:
    """Smallest power of two giving sample spacing <= h on a piece of given length."""
    n = max(1, math.ceil(length / h))
    return 1 << (n - 1).bit_length()


def _chord_halfangle(R: float, rho: float, r: float) -> float:
    """Half-angle (at the center) of the set of sphere points within r of a
    point at distance rho from the center.  Returns a value in [0, pi]."""
    if R <= 0:
        return 0.0
    if rho == 0.0:
        return math.pi if r >= R else 0.0
    t = (R * R + rho * rho - r * r) / (2.0 * R * rho)
    if t >= 1.0:
        return 0.0
    if t <= -1.0:
        return math.pi
    return math.acos(t)


def _sqrt_antideriv(x: float, r: float) -> float:
    # antiderivative of sqrt(r^2 - x^2)
    x = min(max(x, -r), r)
    return 0.5 * (x * math.sqrt(max(r * r - x * x, 0.0)) + r * r * math.asin(x / r))


def _disk_rect_area(r: float, x1: float, x2: float, y1: float, y2: float) -> float:
    """Exact area of {x^2+y^2 < r^2} intersected with [x1,x2] x [y1,y2]."""
    if r <= 0 or x1 >= x2 or y1 >= y2:
        return 0.0
    a, b = max(x1, -r), min(x2, r)
    if a >= b:
        return 0.0
    cuts = {a, b}
    for y in (y1, y2):
        if abs(y) < r:
            xc = math.sqrt(r * r - y * y)
            for s in (-xc, xc):
                if a < s < b:
                    cuts.add(s)
    xs = sorted(cuts)
    total = 0.0
    for lo, hi in zip(xs[:-1], xs[1:]):
        xm = 0.5 * (lo + hi)
        half = math.sqrt(max(r * r - xm * xm, 0.0))
        # upper and lower envelope cases are constant on each piece
        hi_chord = half < y2
        lo_chord = -half > y1
        top_m = half if hi_chord else y2
        bot_m = -half if lo_chord else y1
        if top_m <= bot_m:
            continue
        val = 0.0
        val += (_sqrt_antideriv(hi, r) - _sqrt_antideriv(lo, r)) if hi_chord else y2 * (hi - lo)
        val -= (-(_sqrt_antideriv(hi, r) - _sqrt_antideriv(lo, r))) if lo_chord else y1 * (hi - lo)
        total += val
    return total


def _segment_ball_length(A: np.ndarray, B: np.ndarray, c: np.ndarray, r: float) -> float:
    """Exact length of {t in [0,1] : |A + t(B-A) - c| < r} scaled by |B-A|."""
    d = B - A
    L2 = float(d @ d)
    if L2 == 0.0:
        return 0.0
    f = A - c
    # |f + t d|^2 = r^2
    a, b, cq = L2, 2.0 * float(f @ d), float(f @ f) - r * r
    disc = b * b - 4.0 * a * cq
    if disc <= 0.0:
        return 0.0
    sq = math.sqrt(disc)
    t0, t1 = (-b - sq) / (2 * a), (-b + sq) / (2 * a)
    lo, hi = max(t0, 0.0), min(t1, 1.0)
    if hi <= lo:
        return 0.0
    return (hi - lo) * math.sqrt(L2)


def _boxes_bdist(X: np.ndarray, los: np.ndarray, his: np.ndarray):
    """Distance from each point to each box boundary.  Returns (N, n_boxes)."""
    # clamp distance for exterior points, face margin for interior ones
    lo = los[None, :, :]
    hi = his[None, :, :]
    P = X[:, None, :]
    out = np.maximum(np.maximum(lo - P, P - hi), 0.0)
    d_out = np.sqrt((out * out).sum(axis=2))
    margin = np.minimum(P - lo, hi - P).min(axis=2)
    inside = margin > 0.0
    return np.where(inside, margin, d_out)


def _rect_rect_dist(alo, ahi, blo, bhi) -> float:
    gap = np.maximum(np.maximum(blo - ahi, alo - bhi), 0.0)
    return float(np.sqrt((gap * gap).sum()))


@dataclass
class BoundaryCloud:
    """Weighted boundary samples.  Weights are exact arc/area elements and sum
    to the sampled boundary measure to within accumulation roundoff."""

    points: np.ndarray
    weights: np.ndarray
    component: np.ndarray
    resolution: float
    sigma_exact: float
    aux: dict = field(default_factory=dict)

    def __len__(self):
        return self.points.shape[0]


# ---------------------------------------------------------------------------
# primitive pieces


class _Ball:
    def __init__(self, center, radius, dim):
        self.c = np.asarray(center, dtype=float)
        self.R = float(radius)
        self.dim = dim
        self.unbounded = False
        if self.R <= 0:
            raise ConfigError("ball radius must be positive")

    @property
    def n_components(self):
        return 1

    def inside(self, X):
        return ((X - self.c) ** 2).sum(axis=1) < self.R * self.R

    def bdist(self, X):
        return np.abs(np.sqrt(((X - self.c) ** 2).sum(axis=1)) - self.R)

    def nearest(self, X):
        u = X - self.c
        n = np.sqrt((u * u).sum(axis=1))
        dirs = np.where(n[:, None] > 0, u / np.where(n[:, None] == 0, 1.0, n[:, None]), 0.0)
        deg = n == 0
        if deg.any():
            dirs[deg] = 0.0
            dirs[deg, 0] = 1.0
        return self.c + self.R * dirs

    def sigma_total(self):
        if self.dim == 2:
            return _TWO_PI * self.R
        return 4.0 * math.pi * self.R * self.R

    def diam_boundary(self):
        return 2.0 * self.R

    def bbox(self):
        return self.c - self.R, self.c + self.R

    def samples(self, h):
        if self.dim == 2:
            n = _pow2_count(_TWO_PI * self.R, h)
            ang = (np.arange(n) + 0.5) * (_TWO_PI / n)
            pts = self.c + self.R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
            w = np.full(n, _TWO_PI * self.R / n)
            return pts, w, {"param": ang * self.R}
        area = 4.0 * math.pi * self.R * self.R
        n = _pow2_count(area, h * h)
        i = np.arange(n)
        golden = math.pi * (3.0 - math.sqrt(5.0))
        z = 1.0 - (2.0 * i + 1.0) / n
        rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        th = golden * i
        pts = self.c + self.R * np.stack([rho * np.cos(th), rho * np.sin(th), z], axis=1)
        w = np.full(n, area / n)
        return pts, w, {}

    def ball_measure(self, x, r):
        rho = float(np.linalg.norm(np.asarray(x, dtype=float) - self.c))
        phi = _chord_halfangle(self.R, rho, r) if rho > 0 else (math.pi if r > self.R else 0.0)
        if self.dim == 2:
            return 2.0 * phi * self.R
        return _TWO_PI * self.R * self.R * (1.0 - math.cos(phi))

    def rect_bdist(self, lo, hi):
        nd = float(np.linalg.norm(np.maximum(np.maximum(lo - self.c, self.c - hi), 0.0)))
        far = float(np.sqrt((np.maximum(np.abs(lo - self.c), np.abs(hi - self.c)) ** 2).sum()))
        if nd >= self.R:
            return nd - self.R
        if far <= self.R:
            return self.R - far
        return 0.0


class _BoxCollection:
    """One or many disjoint axis-aligned boxes sharing vectorized oracles.

    mode "union" exposes the open boxes (one component per box); mode
    "complement" exposes the complement of the closed boxes as a single
    connected component with the same boundary.
    """

    def __init__(self, los, his, mode="union", stage=None):
        self.los = np.atleast_2d(np.asarray(los, dtype=float))
        self.his = np.atleast_2d(np.asarray(his, dtype=float))
        self.dim = self.los.shape[1]
        self.mode = mode
        self.stage = np.zeros(len(self.los), dtype=int) if stage is None else np.asarray(stage)
        self.unbounded = mode == "complement"
        if np.any(self.his <= self.los):
            raise ConfigError("box with nonpositive extent")

    @property
    def n_boxes(self):
        return self.los.shape[0]

    @property
    def n_components(self):
        return 1 if self.mode == "complement" else self.n_boxes

    def _in_closed(self, X):
        return ((X[:, None, :] >= self.los[None]) & (X[:, None, :] <= self.his[None])).all(axis=2)

    def inside(self, X):
        if self.mode == "union":
            strict = ((X[:, None, :] > self.los[None]) & (X[:, None, :] < self.his[None])).all(axis=2)
            return strict.any(axis=1)
        return ~self._in_closed(X).any(axis=1)

    def box_index(self, X):
        strict = ((X[:, None, :] > self.los[None]) & (X[:, None, :] < self.his[None])).all(axis=2)
        idx = np.argmax(strict, axis=1)
        idx[~strict.any(axis=1)] = -1
        return idx

    def bdist(self, X):
        return _boxes_bdist(X, self.los, self.his).min(axis=1)

    def nearest(self, X):
        D = _boxes_bdist(X, self.los, self.his)
        j = np.argmin(D, axis=1)
        lo, hi = self.los[j], self.his[j]
        P = np.clip(X, lo, hi)
        interior = ((X > lo) & (X < hi)).all(axis=1)
        if interior.any():
            Xi, loi, hii = X[interior], lo[interior], hi[interior]
            m = np.concatenate([Xi - loi, hii - Xi], axis=1)
            k = np.argmin(m, axis=1)
            Pi = Xi.copy()
            d = self.dim
            for row in range(len(Xi)):
                ax = k[row] % d
                Pi[row, ax] = loi[row, ax] if k[row] < d else hii[row, ax]
            P[interior] = Pi
        return P

    def sigma_total(self):
        ext = self.his - self.los
        if self.dim == 2:
            return float(2.0 * ext.sum())
        a = ext[:, [1, 2, 0]] * ext[:, [2, 0, 1]]
        return float(2.0 * a.sum())

    def diam_boundary(self):
        corners = np.concatenate([self.los, self.his], axis=0)
        lo = corners.min(axis=0)
        hi = corners.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def bbox(self):
        return self.los.min(axis=0), self.his.max(axis=0)

    def _edges(self, b):
        """Perimeter edges of box b in cyclic order, dimension 2 only."""
        lo, hi = self.los[b], self.his[b]
        p = [lo, np.array([hi[0], lo[1]]), hi, np.array([lo[0], hi[1]])]
        return [(p[i], p[(i + 1) % 4]) for i in range(4)]

    def samples(self, h):
        pts, ws, box_id, param = [], [], [], []
        if self.dim == 2:
            for b in range(self.n_boxes):
                s = 0.0
                for A, B in self._edges(b):
                    L = float(np.linalg.norm(B - A))
                    n = _pow2_count(L, h)
                    t = (np.arange(n) + 0.5) / n
                    pts.append(A[None] + t[:, None] * (B - A)[None])
                    ws.append(np.full(n, L / n))
                    box_id.append(np.full(n, b))
                    param.append(s + t * L)
                    s += L
            return (
                np.concatenate(pts),
                np.concatenate(ws),
                {"box": np.concatenate(box_id), "param": np.concatenate(param)},
            )
        for b in range(self.n_boxes):
            lo, hi = self.los[b], self.his[b]
            for axis in range(3):
                for side_val in (lo[axis], hi[axis]):
                    u_ax, v_ax = [a for a in range(3) if a != axis]
                    nu = _pow2_count(hi[u_ax] - lo[u_ax], h)
                    nv = _pow2_count(hi[v_ax] - lo[v_ax], h)
                    uu = lo[u_ax] + (np.arange(nu) + 0.5) * (hi[u_ax] - lo[u_ax]) / nu
                    vv = lo[v_ax] + (np.arange(nv) + 0.5) * (hi[v_ax] - lo[v_ax]) / nv
                    U, V = np.meshgrid(uu, vv, indexing="ij")
                    P = np.empty((nu * nv, 3))
                    P[:, axis] = side_val
                    P[:, u_ax] = U.ravel()
                    P[:, v_ax] = V.ravel()
                    pts.append(P)
                    cell = (hi[u_ax] - lo[u_ax]) / nu * (hi[v_ax] - lo[v_ax]) / nv
                    ws.append(np.full(nu * nv, cell))
                    box_id.append(np.full(nu * nv, b))
        return np.concatenate(pts), np.concatenate(ws), {"box": np.concatenate(box_id)}

    def ball_measure(self, x, r):
        x = np.asarray(x, dtype=float)
        total = 0.0
        for b in range(self.n_boxes):
            lo, hi = self.los[b], self.his[b]
            if _rect_rect_dist(lo, hi, x, x) > r:
                continue
            if self.dim == 2:
                for A, B in self._edges(b):
                    total += _segment_ball_length(A, B, x, r)
            else:
                for axis in range(3):
                    for side_val in (lo[axis], hi[axis]):
                        a = abs(x[axis] - side_val)
                        if a >= r:
                            continue
                        rr = math.sqrt(r * r - a * a)
                        u_ax, v_ax = [aa for aa in range(3) if aa != axis]
                        total += _disk_rect_area(
                            rr,
                            lo[u_ax] - x[u_ax],
                            hi[u_ax] - x[u_ax],
                            lo[v_ax] - x[v_ax],
                            hi[v_ax] - x[v_ax],
                        )
        return total

    def rect_bdist(self, qlo, qhi):
        # distance from the query rect to each face: the per-axis gaps match
        # the solid-box gaps except on the collapsed axis
        qlo = np.asarray(qlo, dtype=float)
        qhi = np.asarray(qhi, dtype=float)
        G = np.maximum(np.maximum(self.los - qhi[None], qlo[None] - self.his), 0.0)
        G2 = G * G
        tot = G2.sum(axis=1)
        best = math.inf
        for axis in range(self.dim):
            for vals in (self.los[:, axis], self.his[:, axis]):
                gap = np.maximum(np.maximum(vals - qhi[axis], qlo[axis] - vals), 0.0)
                d2 = tot - G2[:, axis] + gap * gap
                best = min(best, float(d2.min()))
        return math.sqrt(max(best, 0.0))


class _HalfSpace:
    """The set {0 < x_d} (or the slab {0 < x_d < height}).  The boundary is
    unbounded; sampling covers a centered window of the given width."""

    def __init__(self, dim, window=8.0, height=None):
        self.dim = dim
        self.window = float(window)
        self.height = None if height is None else float(height)
        self.unbounded = True
        if self.height is not None and self.height <= 0:
            raise ConfigError("slab height must be positive")

    @property
    def n_components(self):
        return 1

    def inside(self, X):
        z = X[:, -1]
        ok = z > 0
        if self.height is not None:
            ok &= z < self.height
        return ok

    def bdist(self, X):
        z = np.abs(X[:, -1])
        if self.height is not None:
            z = np.minimum(z, np.abs(self.height - X[:, -1]))
        return z

    def nearest(self, X):
        P = X.copy()
        if self.height is None:
            P[:, -1] = 0.0
            return P
        top = np.abs(self.height - X[:, -1]) < np.abs(X[:, -1])
        P[:, -1] = np.where(top, self.height, 0.0)
        return P

    def sigma_total(self):
        planes = 1 if self.height is None else 2
        return planes * self.window ** (self.dim - 1)

    def diam_boundary(self):
        # diameter of the sampled window, not of the (unbounded) boundary
        w = self.window * math.sqrt(self.dim - 1)
        if self.height is not None:
            w = math.sqrt(w * w + self.height * self.height)
        return w

    def bbox(self):
        w = self.window / 2.0
        lo = np.full(self.dim, -w)
        hi = np.full(self.dim, w)
        lo[-1] = 0.0
        hi[-1] = self.height if self.height is not None else self.window
        return lo, hi

    def samples(self, h):
        planes = [0.0] if self.height is None else [0.0, self.height]
        pts, ws, plane_id, param = [], [], [], []
        w = self.window
        for pi, z in enumerate(planes):
            if self.dim == 2:
                n = _pow2_count(w, h)
                t = -w / 2 + (np.arange(n) + 0.5) * (w / n)
                P = np.stack([t, np.full(n, z)], axis=1)
                pts.append(P)
                ws.append(np.full(n, w / n))
                plane_id.append(np.full(n, pi))
                param.append(t)
            else:
                n = _pow2_count(w, h)
                t = -w / 2 + (np.arange(n) + 0.5) * (w / n)
                U, V = np.meshgrid(t, t, indexing="ij")
                P = np.stack([U.ravel(), V.ravel(), np.full(n * n, z)], axis=1)
                pts.append(P)
                ws.append(np.full(n * n, (w / n) ** 2))
                plane_id.append(np.full(n * n, pi))
        aux = {"plane": np.concatenate(plane_id)}
        if param:
            if self.dim == 2:
                aux["param"] = np.concatenate(param)
        return np.concatenate(pts), np.concatenate(ws), aux

    def ball_measure(self, x, r):
        # measure on the full (unbounded) planes
        x = np.asarray(x, dtype=float)
        planes = [0.0] if self.height is None else [0.0, self.height]
        total = 0.0
        for z in planes:
            a = abs(x[-1] - z)
            if a >= r:
                continue
            rr = math.sqrt(r * r - a * a)
            total += 2.0 * rr if self.dim == 2 else math.pi * rr * rr
        return total

    def rect_bdist(self, qlo, qhi):
        vals = []
        if qlo[-1] <= 0.0 <= qhi[-1]:
            vals.append(0.0)
        else:
            vals.append(min(abs(qlo[-1]), abs(qhi[-1])))
        if self.height is not None:
            if qlo[-1] <= self.height <= qhi[-1]:
                vals.append(0.0)
            else:
                vals.append(min(abs(qlo[-1] - self.height), abs(qhi[-1] - self.height)))
        return min(vals)


class _PolylineGraph:
    """Supergraph {y > phi(x)} of a piecewise linear phi, dimension 2.

    phi extends flat beyond its knot range; the sampled boundary is the
    polyline over the knot window.
    """

    def __init__(self, knots_x, knots_y):
        self.kx = np.asarray(knots_x, dtype=float)
        self.ky = np.asarray(knots_y, dtype=float)
        if len(self.kx) < 2 or np.any(np.diff(self.kx) <= 0):
            raise ConfigError("lipschitz graph needs strictly increasing knots")
        self.dim = 2
        self.unbounded = True
        self.slopes = np.diff(self.ky) / np.diff(self.kx)
        self.lip = float(np.abs(self.slopes).max()) if len(self.slopes) else 0.0
        self.seg_len = np.sqrt(np.diff(self.kx) ** 2 + np.diff(self.ky) ** 2)

    @property
    def n_components(self):
        return 1

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.kx, x) - 1, 0, len(self.kx) - 2)
        y = self.ky[i] + self.slopes[i] * (x - self.kx[i])
        y = np.where(x <= self.kx[0], self.ky[0], y)
        y = np.where(x >= self.kx[-1], self.ky[-1], y)
        return y

    def inside(self, X):
        return X[:, 1] > self.phi(X[:, 0])

    def _all_dists(self, X):
        A = np.stack([self.kx[:-1], self.ky[:-1]], axis=1)
        B = np.stack([self.kx[1:], self.ky[1:]], axis=1)
        D = B - A
        L2 = (D * D).sum(axis=1)
        t = ((X[:, None, :] - A[None]) * D[None]).sum(axis=2) / L2[None]
        t = np.clip(t, 0.0, 1.0)
        # flat rays beyond the ends
        P = A[None] + t[:, :, None] * D[None]
        dseg = np.sqrt(((X[:, None, :] - P) ** 2).sum(axis=2))
        left = np.stack(
            [np.minimum(X[:, 0], self.kx[0]), np.full(len(X), self.ky[0])], axis=1
        )
        right = np.stack(
            [np.maximum(X[:, 0], self.kx[-1]), np.full(len(X), self.ky[-1])], axis=1
        )
        dl = np.sqrt(((X - left) ** 2).sum(axis=1))
        dr = np.sqrt(((X - right) ** 2).sum(axis=1))
        return dseg, P, dl, left, dr, right

    def bdist(self, X):
        dseg, _, dl, _, dr, _ = self._all_dists(X)
        return np.minimum(dseg.min(axis=1), np.minimum(dl, dr))

    def nearest(self, X):
        dseg, P, dl, left, dr, right = self._all_dists(X)
        j = np.argmin(dseg, axis=1)
        best = P[np.arange(len(X)), j]
        bd = dseg[np.arange(len(X)), j]
        use_l = dl < bd
        best[use_l] = left[use_l]
        bd = np.where(use_l, dl, bd)
        use_r = dr < bd
        best[use_r] = right[use_r]
        return best

    def sigma_total(self):
        return float(self.seg_len.sum())

    def diam_boundary(self):
        pts = np.stack([self.kx, self.ky], axis=1)
        d2 = ((pts[:, None, :] - pts[None]) ** 2).sum(axis=2)
        return float(np.sqrt(d2.max()))

    def bbox(self):
        lo = np.array([self.kx[0], self.ky.min()])
        span = max(self.kx[-1] - self.kx[0], np.ptp(self.ky) + 1.0)
        hi = np.array([self.kx[-1], self.ky.min() + span])
        return lo, hi

    def samples(self, h):
        pts, ws, param = [], [], []
        s = 0.0
        for i in range(len(self.kx) - 1):
            A = np.array([self.kx[i], self.ky[i]])
            B = np.array([self.kx[i + 1], self.ky[i + 1]])
            L = self.seg_len[i]
            n = _pow2_count(L, h)
            t = (np.arange(n) + 0.5) / n
            pts.append(A[None] + t[:, None] * (B - A)[None])
            ws.append(np.full(n, L / n))
            param.append(s + t * L)
            s += L
        return np.concatenate(pts), np.concatenate(ws), {"param": np.concatenate(param)}

    def ball_measure(self, x, r):
        x = np.asarray(x, dtype=float)
        total = 0.0
        for i in range(len(self.kx) - 1):
            A = np.array([self.kx[i], self.ky[i]])
            B = np.array([self.kx[i + 1], self.ky[i + 1]])
            total += _segment_ball_length(A, B, x, r)
        return total

    def rect_bdist(self, qlo, qhi):
        best = math.inf
        corners = np.array(
            [[qlo[0], qlo[1]], [qhi[0], qlo[1]], [qlo[0], qhi[1]], [qhi[0], qhi[1]]]
        )
        for i in range(len(self.kx) - 1):
            A = np.array([self.kx[i], self.ky[i]])
            B = np.array([self.kx[i + 1], self.ky[i + 1]])
            if self._seg_hits_rect(A, B, qlo, qhi):
                return 0.0
            # in the plane the min is realized endpoint-to-box or corner-to-segment
            for P in (A, B):
                g = np.maximum(np.maximum(qlo - P, P - qhi), 0.0)
                best = min(best, float(np.sqrt((g * g).sum())))
            D = B - A
            L2 = float(D @ D)
            t = np.clip(((corners - A) @ D) / L2, 0.0, 1.0)
            proj = A[None] + t[:, None] * D[None]
            best = min(best, float(np.sqrt(((corners - proj) ** 2).sum(axis=1)).min()))
        # flat horizontal rays beyond the knot range
        dy_l = max(0.0, qlo[1] - self.ky[0], self.ky[0] - qhi[1])
        dx_l = max(0.0, qlo[0] - self.kx[0])
        best = min(best, math.hypot(dx_l, dy_l))
        dy_r = max(0.0, qlo[1] - self.ky[-1], self.ky[-1] - qhi[1])
        dx_r = max(0.0, self.kx[-1] - qhi[0])
        best = min(best, math.hypot(dx_r, dy_r))
        return best

    @staticmethod
    def _seg_hits_rect(A, B, qlo, qhi):
        # conservative exact test via Liang-Barsky clipping
        D = B - A
        t0, t1 = 0.0, 1.0
        for ax in range(2):
            if D[ax] == 0.0:
                if A[ax] < qlo[ax] or A[ax] > qhi[ax]:
                    return False
            else:
                ta = (qlo[ax] - A[ax]) / D[ax]
                tb = (qhi[ax] - A[ax]) / D[ax]
                ta, tb = min(ta, tb), max(ta, tb)
                t0, t1 = max(t0, ta), min(t1, tb)
                if t0 > t1:
                    return False
        return True


# ---------------------------------------------------------------------------
# the public domain object


class Domain:
    """An open set with exact oracles, assembled from disjoint pieces."""

    def __init__(self, pieces, meta=None):
        if not pieces:
            raise ConfigError("domain needs at least one piece")
        dims = {p.dim for p in pieces}
        if len(dims) != 1:
            raise ConfigError("mixed-dimension pieces")
        self.dim = dims.pop()
        if self.dim not in (2, 3):
            raise UnsupportedDimension(f"dimension {self.dim} is not supported")
        self.pieces = pieces
        self.meta = dict(meta or {})
        self._comp_offset = np.cumsum([0] + [p.n_components for p in pieces])
        self.unbounded = any(p.unbounded for p in pieces)
        if len(pieces) > 1:
            self._check_disjoint()

    def _check_disjoint(self):
        boxes = [p.bbox() for p in self.pieces]
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                if _rect_rect_dist(boxes[i][0], boxes[i][1], boxes[j][0], boxes[j][1]) <= 0.0:
                    raise OverlappingPieces(f"pieces {i} and {j} have intersecting closures")

    @property
    def n_components(self):
        return int(self._comp_offset[-1])

    def contains(self, X):
        X = _as_points(X, self.dim)
        out = np.zeros(len(X), dtype=bool)
        for p in self.pieces:
            out |= p.inside(X)
        return out

    def boundary_distance(self, X):
        X = _as_points(X, self.dim)
        d = np.full(len(X), np.inf)
        for p in self.pieces:
            d = np.minimum(d, p.bdist(X))
        return d

    def signed_distance(self, X):
        d = self.boundary_distance(X)
        return np.where(self.contains(X), d, -d)

    def nearest_boundary(self, X):
        X = _as_points(X, self.dim)
        best_d = np.full(len(X), np.inf)
        best_p = np.zeros_like(X)
        for p in self.pieces:
            d = p.bdist(X)
            mask = d < best_d
            if mask.any():
                near = p.nearest(X[mask])
                best_p[mask] = near
                best_d[mask] = d[mask]
        return best_p, best_d

    def component_of(self, X):
        """Component index for interior points, -1 outside."""
        X = _as_points(X, self.dim)
        out = np.full(len(X), -1, dtype=int)
        for k, p in enumerate(self.pieces):
            ins = p.inside(X)
            if not ins.any():
                continue
            if isinstance(p, _BoxCollection) and p.mode == "union":
                idx = p.box_index(X[ins])
                out[ins] = self._comp_offset[k] + idx
            else:
                out[ins] = self._comp_offset[k]
        return out

    def sample_boundary(self, h) -> BoundaryCloud:
        pieces_out = [p.samples(h) for p in self.pieces]
        sizes = [len(P) for P, _, _ in pieces_out]
        keys = {k for _, _, aux in pieces_out for k in aux}
        merged = {k: [] for k in keys}
        comps = []
        for k, (p, (P, W, aux)) in enumerate(zip(self.pieces, pieces_out)):
            if isinstance(p, _BoxCollection) and p.mode == "union":
                comps.append(self._comp_offset[k] + aux.get("box", np.zeros(len(P), dtype=int)))
            else:
                comps.append(np.full(len(P), self._comp_offset[k]))
            for key in keys:
                merged[key].append(aux.get(key, np.full(len(P), np.nan)))
        aux = {key: np.concatenate(chunks) for key, chunks in merged.items()}
        aux["piece"] = np.repeat(np.arange(len(self.pieces)), sizes)
        return BoundaryCloud(
            np.concatenate([P for P, _, _ in pieces_out]),
            np.concatenate([W for _, W, _ in pieces_out]),
            np.concatenate(comps).astype(int),
            h,
            float(self.sigma_total()),
            aux,
        )

    def sigma_total(self):
        return sum(p.sigma_total() for p in self.pieces)

    def surface_ball_measure(self, x, r):
        return sum(p.ball_measure(x, float(r)) for p in self.pieces)

    def rect_boundary_distance(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return min(p.rect_bdist(lo, hi) for p in self.pieces)

    def diam_boundary(self):
        if len(self.pieces) == 1:
            return self.pieces[0].diam_boundary()
        corners = []
        for p in self.pieces:
            lo, hi = p.bbox()
            corners.append(lo)
            corners.append(hi)
        corners = np.stack(corners)
        return float(np.linalg.norm(corners.max(axis=0) - corners.min(axis=0)))

    def bbox(self):
        los, his = zip(*[p.bbox() for p in self.pieces])
        return np.stack(los).min(axis=0), np.stack(his).max(axis=0)

    def interior_point(self, component=0):
        """A deterministic interior point of the given component."""
        comp = int(component)
        off = self._comp_offset
        for k, p in enumerate(self.pieces):
            if not (off[k] <= comp < off[k + 1]):
                continue
            if isinstance(p, _Ball):
                return p.c.copy()
            if isinstance(p, _BoxCollection):
                if p.mode == "union":
                    b = comp - off[k]
                    return 0.5 * (p.los[b] + p.his[b])
                lo, hi = p.bbox()
                cand = np.concatenate([0.5 * (lo + hi)[:-1], [float(hi[-1]) + 0.25]])
                return cand
            if isinstance(p, _HalfSpace):
                pt = np.zeros(self.dim)
                pt[-1] = (p.height / 2.0) if p.height is not None else p.window / 4.0
                return pt
            if isinstance(p, _PolylineGraph):
                xm = 0.5 * (p.kx[0] + p.kx[-1])
                return np.array([xm, float(p.ky.max()) + 0.5 * (p.kx[-1] - p.kx[0])])
        raise ConfigError(f"no component {component}")


def _four_corner_squares(n_stages):
    los, stage = [], []
    for k in range(n_stages):
        side = 4.0 ** (-k)
        pos = np.zeros((1, 2))
        for j in range(1, k + 1):
            step = 0.75 * 4.0 ** (-(j - 1))
            offs = np.array([[0.0, 0.0], [step, 0.0], [0.0, step], [step, step]])
            pos = (pos[:, None, :] + offs[None]).reshape(-1, 2)
        pos = pos + np.array([2.0 * k, 0.0])
        los.append(pos)
        stage.extend([k] * len(pos))
    los = np.concatenate(los)
    sides = np.array([4.0 ** (-s) for s in stage])
    return los, los + sides[:, None], np.asarray(stage)


def make_domain(spec: dict) -> Domain:
    """Build a Domain from a declarative shape spec."""
    if not isinstance(spec, dict) or "shape" not in spec:
        raise ConfigError("domain spec must be a dict with a 'shape' key")
    shape = spec["shape"]
    d = int(spec.get("d", 2))
    if d not in (2, 3):
        raise UnsupportedDimension(f"dimension {d} is not supported")
    meta = {"shape": shape, "spec": dict(spec)}

    if shape == "ball":
        center = spec.get("center", [0.0] * d)
        return Domain([_Ball(center, spec.get("radius", 1.0), d)], meta)

    if shape == "box":
        if "lo" in spec:
            lo = np.asarray(spec["lo"], dtype=float)
            hi = np.asarray(spec["hi"], dtype=float)
        else:
            c = np.asarray(spec.get("center", [0.0] * d), dtype=float)
            s = np.broadcast_to(
                np.asarray(spec.get("widths", spec.get("size", 1.0)), dtype=float), (d,)
            )
            lo, hi = c - s / 2.0, c + s / 2.0
        if len(lo) != d:
            raise ConfigError("box extent does not match dimension")
        return Domain([_BoxCollection(lo[None], hi[None])], meta)

    if shape == "half_space":
        return Domain(
            [_HalfSpace(d, window=spec.get("window", 8.0), height=spec.get("height"))], meta
        )

    if shape == "half_space_box":
        w = float(spec.get("width", 2.0))
        copies = int(spec.get("copies", 1))
        if copies < 1:
            raise ConfigError("copies must be >= 1")
        los = np.zeros((copies, d))
        los[:, 0] = 2.0 * w * np.arange(copies)
        his = los + w
        return Domain([_BoxCollection(los, his)], meta)

    if shape == "lipschitz_graph":
        if "profile" in spec:
            prof = spec["profile"]
            if prof.get("kind") != "sawtooth":
                raise ConfigError("unknown graph profile")
            slope = float(prof.get("slope", 0.5))
            teeth = int(prof.get("teeth", 4))
            width = float(prof.get("width", 4.0))
            half = width / (2 * teeth)
            xs, ys = [0.0], [0.0]
            for t in range(2 * teeth):
                xs.append(xs[-1] + half)
                ys.append(ys[-1] + (slope * half if t % 2 == 0 else -slope * half))
            kx = np.asarray(xs) - width / 2.0
            ky = np.asarray(ys)
        else:
            kx, ky = spec["knots_x"], spec["knots_y"]
        if d != 2:
            raise UnsupportedDimension("lipschitz_graph supports dimension 2 only")
        piece = _PolylineGraph(kx, ky)
        bound = spec.get("lipschitz_bound")
        if bound is not None and piece.lip > float(bound) + 1e-12:
            raise ConfigError(f"graph slope {piece.lip:.3f} exceeds bound {bound}")
        return Domain([piece], meta)

    if shape == "four_corner":
        stages = int(spec.get("stages", 3))
        if not 1 <= stages <= 8:
            raise ConfigError("four_corner supports 1..8 stages")
        if d != 2:
            raise UnsupportedDimension("four_corner is planar")
        los, his, stage = _four_corner_squares(stages)
        return Domain([_BoxCollection(los, his, stage=stage)], meta)

    if shape == "cantor_complement":
        k = int(spec.get("stage", 2))
        if not 0 <= k <= 8:
            raise ConfigError("cantor stage must be in 0..8")
        if d != 2:
            raise UnsupportedDimension("cantor_complement is planar")
        side = 4.0 ** (-k)
        pos = np.zeros((1, 2))
        for j in range(1, k + 1):
            step = 0.75 * 4.0 ** (-(j - 1))
            offs = np.array([[0.0, 0.0], [step, 0.0], [0.0, step], [step, step]])
            pos = (pos[:, None, :] + offs[None]).reshape(-1, 2)
        return Domain([_BoxCollection(pos, pos + side, mode="complement")], meta)

    raise ConfigError(f"unknown shape {shape!r}")


# ---------------------------------------------------------------------------
# ADR report


@dataclass
class AdrReport:
    rows: list  # (center_index, radius, sigma, ratio)
    adr_const: float
    min_ratio: float
    max_ratio: float
    dim: int

    def ratios(self):
        return np.array([r[3] for r in self.rows])


def adr_report(domain: Domain, radii=None, n_centers: int = 24, cloud: BoundaryCloud | None = None) -> AdrReport:
    """Measure sigma(Delta(x, r)) / r^(d-1) over boundary centers and radii."""
    n = domain.dim - 1
    if cloud is None:
        cloud = domain.sample_boundary(domain.diam_boundary() / 512.0)
    if radii is None:
        top = domain.diam_boundary() / 2.0
        radii = top * 2.0 ** (-np.arange(10, dtype=float))
    stride = max(1, len(cloud) // n_centers)
    centers = cloud.points[::stride][:n_centers]
    rows = []
    for ci, x in enumerate(centers):
        for r in radii:
            s = domain.surface_ball_measure(x, float(r))
            if s <= 0:
                continue
            rows.append((ci, float(r), s, s / float(r) ** n))
    ratios = np.array([r[3] for r in rows])
    return AdrReport(
        rows=rows,
        adr_const=float(max(ratios.max(), 1.0 / ratios.min())),
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        dim=domain.dim,
    )


# ---------------------------------------------------------------------------
# corkscrew search


@dataclass
class CorkscrewPoint:
    point: np.ndarray
    c: float
    margin: float


def corkscrew_point(domain: Domain, center, radius: float, c: float = 0.25) -> CorkscrewPoint:
    """A point X with B(X, c r) contained in B(center, r) and in the domain.

    Searches a lattice of pitch c*r/4 and returns the feasible point with the
    largest safety margin; the exact distance oracle certifies feasibility.
    """
    x = np.asarray(center, dtype=float)
    r = float(radius)
    if not (0 < c < 1):
        raise ConfigError("corkscrew constant must be in (0, 1)")
    pitch = c * r / 4.0
    span = np.arange(-math.floor(r / pitch), math.floor(r / pitch) + 1) * pitch
    grids = np.meshgrid(*([span] * domain.dim), indexing="ij")
    cand = x[None, :] + np.stack([g.ravel() for g in grids], axis=1)
    dist_c = np.sqrt(((cand - x[None]) ** 2).sum(axis=1))
    keep = dist_c <= (1.0 - c) * r * (1.0 + 1e-12)
    cand, dist_c = cand[keep], dist_c[keep]
    if len(cand):
        ins = domain.contains(cand)
        cand, dist_c = cand[ins], dist_c[ins]
    if len(cand):
        delta = domain.boundary_distance(cand)
        margin = np.minimum(delta - c * r, (1.0 - c) * r - dist_c)
        ok = margin >= -1e-12 * r
        if ok.any():
            best = int(np.argmax(np.where(ok, margin, -np.inf)))
            return CorkscrewPoint(cand[best], c, float(margin[best]))
    raise CorkscrewNotFound(
        f"no corkscrew point for ball r={r:.4g}, c={c} (lattice pitch {pitch:.3g})",
        resolution=pitch,
    )


# ---------------------------------------------------------------------------
# weak half-space approximation certificates


@dataclass
class WhsaCertificate:
    feasible: bool
    normal: np.ndarray | None
    offset: float | None
    eps: float
    K0: float
    center: np.ndarray
    ell: float
    clipped: bool
    capped: bool
    checks: dict
    best_violation: dict | None = None

    def verify(self, domain: Domain, cloud: BoundaryCloud, refine: float = 2.0) -> bool:
        """Re-check the stored witness with an independently refined net."""
        if not self.feasible:
            return False
        out = _whsa_check(
            domain,
            cloud,
            self.center,
            self.ell,
            self.eps,
            self.K0,
            self.normal,
            self.offset,
            net_factor=4.0 * refine,
        )
        return out["ok"]


def _whsa_plane_net(center, normal, radius, spacing, dim):
    """Deterministic net on the disk P cap B(center, radius)."""
    n = np.asarray(normal, dtype=float)
    if dim == 2:
        t = np.array([-n[1], n[0]])
        m = max(1, int(math.ceil(radius / spacing)))
        s = np.arange(-m, m + 1) * spacing
        return center[None] + s[:, None] * t[None]
    # orthobasis in the plane
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(n, a)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    m = max(1, int(math.ceil(radius / spacing)))
    s = np.arange(-m, m + 1) * spacing
    U, V = np.meshgrid(s, s, indexing="ij")
    pts = center[None] + U.ravel()[:, None] * u[None] + V.ravel()[:, None] * v[None]
    keep = ((pts - center[None]) ** 2).sum(axis=1) <= radius * radius
    return pts[keep]


def _whsa_check(domain, cloud, x_q, ell, eps, K0, normal, offset, net_factor=4.0):
    big_r = ell / (eps * eps)
    lo, hi = domain.bbox()
    clip_r = float(np.linalg.norm(hi - lo))
    R = min(big_r, clip_r)
    nb = np.asarray(normal, dtype=float)
    proj = cloud.points @ nb
    d_q = ((cloud.points - x_q[None]) ** 2).sum(axis=1)
    in_big = d_q < R * R
    # (c): no boundary strictly on the positive side of the plane
    c_margin = float((proj[in_big] - offset).max()) if in_big.any() else -math.inf
    # (b): the cell reaches within K0^(3/2) ell of the plane
    near_q = d_q < (2.0 * ell) ** 2
    b_val = float(np.abs(proj[near_q] - offset).min()) if near_q.any() else math.inf
    # (d): near the cell the boundary stays eps ell close to the plane
    local = d_q < ell * ell
    d_margin = float(np.abs(proj[local] - offset).max() - eps * ell) if local.any() else math.inf
    # (a): every plane point near the cell is eps ell close to the boundary;
    # the patch is centered on the foot of the cell center, so it is never empty
    p0 = x_q + (offset - float(x_q @ nb)) * nb
    net = _whsa_plane_net(p0, nb, ell, eps * ell / net_factor, domain.dim)
    a_margin = float(domain.boundary_distance(net).max() - eps * ell)
    ok = (
        (c_margin <= 1e-12)
        and (b_val <= K0 ** 1.5 * ell)
        and (a_margin <= 1e-12)
        and (d_margin <= 1e-12)
    )
    return {
        "ok": ok,
        "a_margin": a_margin,
        "b_value": b_val,
        "c_margin": c_margin,
        "d_margin": d_margin,
        "clipped": big_r > clip_r,
    }


def whsa_feasibility(
    domain: Domain,
    center,
    ell: float,
    eps: float,
    K0: float = 2.0,
    cloud: BoundaryCloud | None = None,
    max_orientations: int = 4096,
) -> WhsaCertificate:
    """Search for a plane witnessing weak half-space approximation at a cell.

    The search sweeps plane orientations at angular resolution eps/8 and
    offsets at eps*ell/8 starting from the highest boundary sample under each
    orientation.  The big ball is clipped to the domain working box when it
    overflows, and the certificate records that.
    """
    x_q = np.asarray(center, dtype=float)
    ell = float(ell)
    if cloud is None:
        cloud = domain.sample_boundary(max(eps * ell / 8.0, domain.diam_boundary() / 4096.0))
    capped = False
    if domain.dim == 2:
        m = int(math.ceil(_TWO_PI / (eps / 8.0)))
        if m > max_orientations:
            m, capped = max_orientations, True
        ang = (np.arange(m) + 0.5) * (_TWO_PI / m)
        normals = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        m = int(math.ceil(4.0 * math.pi / (eps / 8.0) ** 2))
        if m > max_orientations:
            m, capped = max_orientations, True
        i = np.arange(m)
        z = 1.0 - (2.0 * i + 1.0) / m
        rho = np.sqrt(np.maximum(1.0 - z * z, 0.0))
        th = math.pi * (3.0 - math.sqrt(5.0)) * i
        normals = np.stack([rho * np.cos(th), rho * np.sin(th), z], axis=1)

    big_r = ell / (eps * eps)
    lo, hi = domain.bbox()
    clip_r = float(np.linalg.norm(hi - lo))
    R = min(big_r, clip_r)
    in_big = ((cloud.points - x_q[None]) ** 2).sum(axis=1) < R * R
    pts_big = cloud.points[in_big]
    step = eps * ell / 8.0
    best = None
    for nb in normals:
        if not len(pts_big):
            break
        proj = pts_big @ nb
        s0 = float(proj.max())  # lowest plane with nothing above it
        for k in range(32):
            s = s0 + k * step
            out = _whsa_check(domain, cloud, x_q, ell, eps, K0, nb, s)
            if out["ok"]:
                return WhsaCertificate(
                    True, nb.copy(), s, eps, K0, x_q, ell, out["clipped"], capped, out
                )
            score = (
                max(out["a_margin"], 0.0)
                + max(out["d_margin"], 0.0)
                + max(out["b_value"] - K0 ** 1.5 * ell, 0.0)
            )
            if best is None or score < best[0]:
                best = (score, {"normal": nb.copy(), "offset": s, **out})
            if out["b_value"] > K0 ** 1.5 * ell:
                break  # larger offsets only push the plane further from the cell
    return WhsaCertificate(
        False, None, None, eps, K0, x_q, ell, big_r > clip_r, capped, {}, best[1] if best else None
    )
