"""Christ-type dyadic grids on boundary clouds.

A grid is a uniform-depth tree of boundary cells.  Every supported shape gets
a structured construction: binary arcs on circles, perimeter halves on box
boundaries, the corner quadtree on self-similar square sets (glued across
stages through contiguous index ranges), window cells on planes, quad cells on
sphere faces through the inscribed-cube projection.  Cell scale is
l(Q) = 2^(-k) * l0 by definition of the generation k, and the comparability
constant C1 between l(Q) and the actual cell geometry is measured on the built
tree, never assumed.  The build fails hard if C1 exceeds 8.

Cubes are numbered in depth-first preorder, so a subtree is the contiguous id
range [i, subtree_end[i]) and the samples of a cube are the contiguous slice
[sample_lo[i], sample_hi[i]) of the reordered cloud.  Sample weights are exact
dyadic multiples per piece, which makes sigma additive along the tree without
tolerance on the self-similar shapes: parent sums equal child sums bitwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import GridConstructionError, ResolutionTooCoarse
from .geometry import BoundaryCloud, Domain

MAX_DEPTH = 16
C1_CAP = 8.0


# ---------------------------------------------------------------------------
# construction cells


class _Node:
    __slots__ = ("idx", "center", "children")

    def __init__(self, idx, center=None):
        self.idx = idx          # cloud sample indices (original order)
        self.center = center    # explicit boundary point, or None for nearest-to-centroid
        self.children = []


def _build_param_tree(idx, params, lo, hi, point_of, depth):
    """Binary halving of a 1d parameter range down to the given depth.

    idx must be sorted by params.  point_of maps a parameter value to a
    boundary point; None falls back to the centroid policy.
    """
    center = None if point_of is None else np.asarray(point_of(0.5 * (lo + hi)))
    node = _Node(idx, center=center)
    if depth == 0:
        return node
    mid = 0.5 * (lo + hi)
    pos = int(np.searchsorted(params, mid, side="left"))
    if pos == 0 or pos == len(idx):
        raise ResolutionTooCoarse("parameter cell ran out of samples before target depth")
    node.children = [
        _build_param_tree(idx[:pos], params[:pos], lo, mid, point_of, depth - 1),
        _build_param_tree(idx[pos:], params[pos:], mid, hi, point_of, depth - 1),
    ]
    return node


def _sorted_param_tree(idx, params, lo, hi, point_of, depth):
    o = np.argsort(params, kind="stable")
    return _build_param_tree(idx[o], params[o], lo, hi, point_of, depth)


def _perimeter_point(boxes, b: int, s: float) -> np.ndarray:
    lo, hi = boxes.los[b], boxes.his[b]
    w, h = hi[0] - lo[0], hi[1] - lo[1]
    s = s % (2 * (w + h))
    if s < w:
        return np.array([lo[0] + s, lo[1]])
    s -= w
    if s < h:
        return np.array([hi[0], lo[1] + s])
    s -= h
    if s < w:
        return np.array([hi[0] - s, hi[1]])
    s -= w
    return np.array([lo[0], hi[1] - s])


def _box_perimeter_tree(boxes, b, idx, params, depth):
    lo_p = 0.0
    hi_p = 2.0 * float((boxes.his[b] - boxes.los[b]).sum())
    return _sorted_param_tree(
        idx, params, lo_p, hi_p, lambda s, b=b: _perimeter_point(boxes, b, s), depth
    )


def _graft(node, sub):
    """Adopt the root of another construction tree without adding a generation."""
    node.children = sub.children
    node.center = sub.center
    return node


def _split_by_key(idx, keys, cut):
    li = idx[keys < cut]
    ri = idx[keys >= cut]
    if len(li) == 0 or len(ri) == 0:
        raise ResolutionTooCoarse("cell ran out of samples before target depth")
    return li, ri


def _build_box_range_tree(boxes, idx, b_lo, b_hi, depth, aux):
    """Cells over a contiguous box-index range; single boxes split by perimeter."""
    node = _Node(idx)
    if depth == 0:
        return node
    if b_hi - b_lo == 1:
        return _graft(node, _box_perimeter_tree(boxes, b_lo, idx, aux["param"][idx], depth))
    mid = (b_lo + b_hi + 1) // 2
    li, ri = _split_by_key(idx, aux["box"][idx], mid)
    node.children = [
        _build_box_range_tree(boxes, li, b_lo, mid, depth - 1, aux),
        _build_box_range_tree(boxes, ri, mid, b_hi, depth - 1, aux),
    ]
    return node


def _build_square_range_tree(boxes, idx, s_lo, s_hi, depth, aux):
    """Quadtree over an aligned range of corner squares, one binary step per
    generation (row pair, then square), perimeter params inside a square."""
    node = _Node(idx)
    if depth == 0:
        return node
    n = s_hi - s_lo
    if n == 1:
        return _graft(node, _box_perimeter_tree(boxes, s_lo, idx, aux["param"][idx], depth))
    mid = s_lo + n // 2
    li, ri = _split_by_key(idx, aux["box"][idx], mid)
    node.children = [
        _build_square_range_tree(boxes, li, s_lo, mid, depth - 1, aux),
        _build_square_range_tree(boxes, ri, mid, s_hi, depth - 1, aux),
    ]
    return node


def _build_four_corner_tree(boxes, idx, stage_lo, stage_hi, depth, aux):
    """Halve the stage-index range, then descend each stage's square quadtree."""
    node = _Node(idx)
    if depth == 0:
        return node
    if stage_hi - stage_lo > 1:
        mid = (stage_lo + stage_hi + 1) // 2
        cut = sum(4 ** k for k in range(mid))  # first global square index of stage mid
        li, ri = _split_by_key(idx, aux["box"][idx], cut)
        node.children = [
            _build_four_corner_tree(boxes, li, stage_lo, mid, depth - 1, aux),
            _build_four_corner_tree(boxes, ri, mid, stage_hi, depth - 1, aux),
        ]
        return node
    k = stage_lo
    base = sum(4 ** j for j in range(k))
    return _graft(node, _build_square_range_tree(boxes, idx, base, base + 4 ** k, depth, aux))


def _build_rect_tree(idx, keys2, lo, hi, depth, embed):
    """Quad cells on a planar chart: all four quadrants per generation, so the
    chart diameter halves in step with l(Q).  keys2 holds the chart coordinates
    of every sample; embed maps chart coordinates to a boundary point."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    c = 0.5 * (lo + hi)
    node = _Node(idx, center=np.asarray(embed(c)))
    if depth == 0:
        return node
    k = keys2[idx]
    right = k[:, 0] >= c[0]
    top = k[:, 1] >= c[1]
    node.children = []
    for qy in (False, True):
        for qx in (False, True):
            sel = idx[(right == qx) & (top == qy)]
            if len(sel) == 0:
                raise ResolutionTooCoarse("chart cell ran out of samples before target depth")
            qlo = np.array([c[0] if qx else lo[0], c[1] if qy else lo[1]])
            qhi = np.array([hi[0] if qx else c[0], hi[1] if qy else c[1]])
            node.children.append(_build_rect_tree(sel, keys2, qlo, qhi, depth - 1, embed))
    return node


def _box3_face_split(boxes, b, pts, idx, depth):
    """One generation splitting a 3d box boundary into its six faces, then
    quad cells within each face chart."""
    node = _Node(idx)
    if depth == 0:
        return node
    lo, hi = boxes.los[b], boxes.his[b]
    kids = []
    for axis in range(3):
        u_ax, v_ax = [a for a in range(3) if a != axis]
        for side_val in (lo[axis], hi[axis]):
            sel = idx[pts[idx][:, axis] == side_val]
            if len(sel) == 0:
                raise ResolutionTooCoarse("box face has no samples")

            def embed(c2, axis=axis, u_ax=u_ax, v_ax=v_ax, side_val=side_val):
                p = np.zeros(3)
                p[axis] = side_val
                p[u_ax], p[v_ax] = c2
                return p

            kids.append(
                _build_rect_tree(
                    sel, pts[:, [u_ax, v_ax]],
                    [lo[u_ax], lo[v_ax]], [hi[u_ax], hi[v_ax]], depth - 1, embed,
                )
            )
    node.children = kids
    return node


def _build_box3_tree(boxes, pts, idx, b_lo, b_hi, depth, aux):
    node = _Node(idx)
    if depth == 0:
        return node
    if b_hi - b_lo == 1:
        return _graft(node, _box3_face_split(boxes, b_lo, pts, idx, depth))
    mid = (b_lo + b_hi + 1) // 2
    li, ri = _split_by_key(idx, aux["box"][idx], mid)
    node.children = [
        _build_box3_tree(boxes, pts, li, b_lo, mid, depth - 1, aux),
        _build_box3_tree(boxes, pts, ri, mid, b_hi, depth - 1, aux),
    ]
    return node


def _build_sphere_tree(piece, pts, idx, depth):
    """Six face charts of the inscribed cube, central projection, quad cells."""
    node = _Node(idx, center=None)
    if depth == 0:
        return node
    v = (pts - piece.c) / piece.R
    ax = np.argmax(np.abs(v), axis=1)
    kids = []
    for axis in range(3):
        u_ax, v_ax = [a for a in range(3) if a != axis]
        for sign in (-1.0, 1.0):
            sel = idx[(ax[idx] == axis) & (np.sign(v[idx, axis]) == sign)]
            if len(sel) == 0:
                raise ResolutionTooCoarse("sphere face has no samples")
            # chart coordinates: central projection onto the cube face
            with np.errstate(divide="ignore", invalid="ignore"):
                keys2 = v[:, [u_ax, v_ax]] / v[:, [axis]]

            def embed(c2, axis=axis, u_ax=u_ax, v_ax=v_ax, sign=sign):
                w = np.zeros(3)
                w[axis] = sign
                w[u_ax], w[v_ax] = sign * c2[0], sign * c2[1]
                return piece.c + piece.R * w / np.linalg.norm(w)

            kids.append(
                _build_rect_tree(sel, keys2, [-1.0, -1.0], [1.0, 1.0], depth - 1, embed)
            )
    node.children = kids
    return node


# ---------------------------------------------------------------------------
# the grid object


@dataclass(frozen=True)
class DyadicCube:
    """Read-only view of one cube."""

    grid: "DyadicGrid"
    idx: int

    @property
    def generation(self):
        return int(self.grid.gen[self.idx])

    @property
    def ell(self):
        return self.grid.ell(self.idx)

    @property
    def sigma(self):
        return self.grid.cube_sigma(self.idx)

    @property
    def center(self):
        return self.grid.center[self.idx]

    @property
    def sample_slice(self):
        return slice(int(self.grid.sample_lo[self.idx]), int(self.grid.sample_hi[self.idx]))

    @property
    def points(self):
        return self.grid.points[self.sample_slice]

    @property
    def children(self):
        return [DyadicCube(self.grid, int(c)) for c in self.grid.children[self.idx]]

    @property
    def parent(self):
        p = int(self.grid.parent[self.idx])
        return None if p < 0 else DyadicCube(self.grid, p)

    @property
    def component(self):
        return int(self.grid.component[self.grid.sample_lo[self.idx]])

    def __repr__(self):
        return f"DyadicCube(gen={self.generation}, ell={self.ell:.4g}, sigma={self.sigma:.4g})"


class DyadicGrid:
    def __init__(self, domain, cloud, root, depth, ell0, meta):
        self.domain = domain
        self.depth = depth
        self.ell0 = float(ell0)
        self.meta = meta
        n_nodes = _count(root)
        self.gen = np.zeros(n_nodes, dtype=np.int32)
        self.parent = np.full(n_nodes, -1, dtype=np.int64)
        self.subtree_end = np.zeros(n_nodes, dtype=np.int64)
        self.sample_lo = np.zeros(n_nodes, dtype=np.int64)
        self.sample_hi = np.zeros(n_nodes, dtype=np.int64)
        self.children: list[list[int]] = [[] for _ in range(n_nodes)]
        self.center = np.zeros((n_nodes, cloud.points.shape[1]))
        order = []
        centers_todo = []
        counter = [0]
        pos = [0]

        def visit(node, parent_id, g):
            my = counter[0]
            counter[0] += 1
            self.gen[my] = g
            self.parent[my] = parent_id
            if parent_id >= 0:
                self.children[parent_id].append(my)
            self.sample_lo[my] = pos[0]
            if not node.children:
                order.append(node.idx)
                pos[0] += len(node.idx)
            else:
                for ch in node.children:
                    visit(ch, my, g + 1)
            self.sample_hi[my] = pos[0]
            self.subtree_end[my] = counter[0]
            if node.center is not None:
                self.center[my] = node.center
            else:
                centers_todo.append(my)

        visit(root, -1, 0)
        perm = np.concatenate(order)
        self.points = cloud.points[perm]
        self.weights = cloud.weights[perm]
        self.component = cloud.component[perm]
        self.perm = perm
        self.cloud = BoundaryCloud(
            self.points, self.weights, self.component, cloud.resolution, cloud.sigma_exact,
            {k: v[perm] for k, v in cloud.aux.items()},
        )
        self.wsum = np.concatenate([[0.0], np.cumsum(self.weights)])
        self.leaves = np.flatnonzero(self.gen == self.depth)
        if not len(self.leaves) or int(self.gen.max()) != self.depth:
            raise GridConstructionError("construction did not reach a uniform depth")
        self.leaf_of_sample = np.zeros(len(perm), dtype=np.int64)
        self.leaf_rank = np.full(n_nodes, -1, dtype=np.int64)
        for r, lf in enumerate(self.leaves):
            self.leaf_of_sample[self.sample_lo[lf]: self.sample_hi[lf]] = lf
            self.leaf_rank[lf] = r
        # leaf-rank ranges per cube (a cube's leaves are DFS-contiguous)
        self.leaf_lo = np.searchsorted(self.leaves, np.arange(n_nodes))
        self.leaf_hi = np.searchsorted(self.leaves, self.subtree_end - 1, side="right")
        for my in centers_todo:
            sl = slice(self.sample_lo[my], self.sample_hi[my])
            w = self.weights[sl]
            centroid = (self.points[sl] * w[:, None]).sum(axis=0) / w.sum()
            j = int(np.argmin(((self.points[sl] - centroid) ** 2).sum(axis=1)))
            self.center[my] = self.points[self.sample_lo[my] + j]
        self._tree = None
        self._measure_c1()

    # -- measured constants

    def _measure_c1(self):
        M = self.n_cubes
        rho_out = np.zeros(M)
        for i in range(M):
            sl = slice(self.sample_lo[i], self.sample_hi[i])
            d = np.sqrt(((self.points[sl] - self.center[i]) ** 2).sum(axis=1))
            rho_out[i] = d.max() if d.size else 0.0
        tree = self.sample_tree()
        rho_in = np.full(M, np.inf)
        n = len(self.points)
        for i in range(M):
            lo, hi = int(self.sample_lo[i]), int(self.sample_hi[i])
            if hi - lo >= n:
                continue
            k = 8
            while True:
                kk = min(k, n)
                d, j = tree.query(self.center[i], k=kk)
                d, j = np.atleast_1d(d), np.atleast_1d(j)
                outside = (j < lo) | (j >= hi)
                if outside.any():
                    rho_in[i] = d[outside].min()
                    break
                if kk == n:
                    break
                k *= 8
        ell = self.ell0 * 2.0 ** (-self.gen.astype(float))
        c_out = float(np.max(rho_out / ell))
        with np.errstate(divide="ignore"):
            c_in = float(np.max(np.where(np.isfinite(rho_in), ell / rho_in, 0.0)))
        self.rho_out = rho_out
        self.rho_in = rho_in
        self.C1 = max(1.0, c_out, c_in) * (1.0 + 1e-9)
        if self.C1 > C1_CAP:
            raise GridConstructionError(
                f"measured comparability constant C1={self.C1:.3f} exceeds cap {C1_CAP}"
            )

    @property
    def Xi(self):
        return 2.0 * self.C1 * self.C1

    # -- basic accessors

    @property
    def n_cubes(self):
        return len(self.gen)

    def cube(self, i) -> DyadicCube:
        return DyadicCube(self, int(i))

    def ell(self, i):
        return self.ell0 * 2.0 ** (-float(self.gen[i]))

    def cube_sigma(self, i):
        return float(self.wsum[self.sample_hi[i]] - self.wsum[self.sample_lo[i]])

    def sigma_vector(self):
        return self.wsum[self.sample_hi] - self.wsum[self.sample_lo]

    def radius(self, i):
        return self.ell(i) / (2.0 * self.C1)

    def cubes_at(self, gen):
        return np.flatnonzero(self.gen == gen)

    def descendants(self, i):
        """Cube i together with everything below it (DFS preorder range)."""
        return np.arange(i, self.subtree_end[i])

    def sample_tree(self):
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    def locate_point(self, x, gen=None):
        """Cube holding the boundary sample nearest to x, at the given generation."""
        _, j = self.sample_tree().query(np.asarray(x, dtype=float), k=1)
        leaf = int(self.leaf_of_sample[j])
        if gen is None:
            return leaf
        return self.ancestor(leaf, gen)

    def ancestor(self, i, gen):
        while self.gen[i] > gen:
            i = int(self.parent[i])
        if self.gen[i] != gen:
            raise ValueError("no ancestor at that generation")
        return int(i)

    def is_ancestor(self, a, b):
        """True iff cube a contains cube b (possibly equal)."""
        return a <= b < self.subtree_end[a]

    def cube_dist(self, a, b):
        """Distance between the sample sets of two cubes."""
        sa = slice(self.sample_lo[a], self.sample_hi[a])
        sb = slice(self.sample_lo[b], self.sample_hi[b])
        A, B = self.points[sa], self.points[sb]
        if len(A) * len(B) <= 1_000_000:
            d2 = ((A[:, None, :] - B[None]) ** 2).sum(axis=2)
            return float(np.sqrt(d2.min()))
        if len(A) > len(B):
            A, B = B, A
        t = cKDTree(B)
        d, _ = t.query(A, k=1)
        return float(d.min())

    def balls(self, i):
        """Ball radii certified by the measured C1: on samples, the surface
        ball of radius 2 r_Q sits inside Q and Xi r_Q covers Q."""
        r = self.radius(i)
        return {"center": self.center[i], "r": r, "R_inner": 2.0 * r, "R_outer": self.Xi * r}


def _count(node):
    return 1 + sum(_count(c) for c in node.children)


# ---------------------------------------------------------------------------
# public construction


def build_grid(domain: Domain, depth: int, cloud: BoundaryCloud | None = None) -> DyadicGrid:
    """Build the dyadic grid for a domain's boundary down to the given depth."""
    if not 1 <= depth <= MAX_DEPTH:
        raise GridConstructionError(f"depth must be in 1..{MAX_DEPTH}")
    shape = domain.meta.get("shape", "generic")
    # l0 is the analytic boundary diameter (window diameter for unbounded pieces)
    ell0 = domain.diam_boundary()
    if cloud is None:
        cloud = domain.sample_boundary(ell0 * 2.0 ** (-(depth + 2)))
    if cloud.resolution > ell0 * 2.0 ** (-(depth + 2)) * (1 + 1e-12):
        raise ResolutionTooCoarse(
            f"cloud resolution {cloud.resolution:.3g} exceeds "
            f"{ell0 * 2.0 ** (-(depth + 2)):.3g} required for depth {depth}"
        )
    idx_all = np.arange(len(cloud))
    piece = domain.pieces[0]
    meta = {"shape": shape, "window_grid": domain.unbounded}
    aux = cloud.aux

    if shape == "ball" and domain.dim == 2:
        R, c0 = piece.R, piece.c

        def point_of(s):
            a = s / R
            return c0 + R * np.array([math.cos(a), math.sin(a)])

        root = _sorted_param_tree(idx_all, aux["param"], 0.0, 2 * math.pi * R, point_of, depth)
    elif shape == "ball":
        root = _build_sphere_tree(piece, cloud.points, idx_all, depth)
    elif shape == "four_corner":
        root = _build_four_corner_tree(
            piece, idx_all, 0, int(piece.stage.max()) + 1, depth, aux
        )
    elif shape == "cantor_complement":
        root = _build_square_range_tree(piece, idx_all, 0, piece.n_boxes, depth, aux)
    elif shape in ("box", "half_space_box") and domain.dim == 2:
        root = _build_box_range_tree(piece, idx_all, 0, piece.n_boxes, depth, aux)
    elif shape in ("box", "half_space_box"):
        root = _build_box3_tree(piece, cloud.points, idx_all, 0, piece.n_boxes, depth, aux)
    elif shape == "half_space":
        plane = aux["plane"].astype(int)
        planes = sorted(set(plane.tolist()))
        zvals = [0.0] + ([piece.height] if piece.height is not None else [])
        w = piece.window
        trees = []
        sub_depth = depth if len(planes) == 1 else depth - 1
        if sub_depth < 1:
            raise GridConstructionError("slab grids need depth at least 2")
        for pi in planes:
            sel = idx_all[plane == pi] if len(planes) > 1 else idx_all
            z = zvals[pi]
            if domain.dim == 2:
                trees.append(
                    _sorted_param_tree(
                        sel, aux["param"][sel], -w / 2, w / 2,
                        lambda s, z=z: np.array([s, z]), sub_depth,
                    )
                )
            else:
                trees.append(
                    _build_rect_tree(
                        sel, cloud.points[:, :2], [-w / 2, -w / 2], [w / 2, w / 2],
                        sub_depth, lambda c2, z=z: np.array([c2[0], c2[1], z]),
                    )
                )
        if len(trees) == 1:
            root = trees[0]
        else:
            root = _Node(idx_all)
            root.children = trees
    elif shape == "lipschitz_graph":
        root = _sorted_param_tree(
            idx_all, aux["param"], 0.0, float(aux["param"].max()) + cloud.resolution,
            None, depth,
        )
    else:
        raise GridConstructionError(f"no grid construction for shape {shape!r}")

    return DyadicGrid(domain, cloud, root, depth, ell0, meta)


# ---------------------------------------------------------------------------
# measures, maximal function, closeness


class DiscreteMeasure:
    """Nonnegative masses on the leaves of a grid."""

    def __init__(self, grid: DyadicGrid, leaf_masses):
        m = np.asarray(leaf_masses, dtype=float)
        if m.shape != (len(grid.leaves),):
            raise ValueError("leaf mass vector has wrong length")
        if (m < 0).any():
            raise ValueError("masses must be nonnegative")
        self.grid = grid
        self.leaf_masses = m
        self._psum = np.concatenate([[0.0], np.cumsum(m)])

    @classmethod
    def sigma(cls, grid):
        return cls(grid, grid.sigma_vector()[grid.leaves])

    @classmethod
    def from_density(cls, grid, density_at_samples):
        d = np.asarray(density_at_samples, dtype=float)
        w = grid.weights * d
        lo = grid.sample_lo[grid.leaves]
        hi = grid.sample_hi[grid.leaves]
        cs = np.concatenate([[0.0], np.cumsum(w)])
        return cls(grid, cs[hi] - cs[lo])

    def cube_mass(self, i):
        g = self.grid
        return float(self._psum[g.leaf_hi[i]] - self._psum[g.leaf_lo[i]])

    def cube_masses(self):
        g = self.grid
        return self._psum[g.leaf_hi] - self._psum[g.leaf_lo]

    @property
    def total(self):
        return float(self._psum[-1])


def dyadic_maximal(measure: DiscreteMeasure, x, return_cube=False):
    """Max of mass/sigma over the cubes containing the boundary point nearest x."""
    g = measure.grid
    leaf = g.locate_point(x)
    best, best_cube = -math.inf, leaf
    i = leaf
    while i >= 0:
        r = measure.cube_mass(i) / g.cube_sigma(i)
        if r > best:
            best, best_cube = r, i
        i = int(g.parent[i])
    return (best, best_cube) if return_cube else best


def maximal_on_leaves(measure: DiscreteMeasure) -> np.ndarray:
    """Dyadic maximal function as a per-leaf vector (single top-down pass)."""
    g = measure.grid
    ratios = measure.cube_masses() / g.sigma_vector()
    out = np.zeros(g.n_cubes)
    for i in range(g.n_cubes):
        p = g.parent[i]
        out[i] = ratios[i] if p < 0 else max(out[p], ratios[i])
    return out[g.leaves]


def are_n_close(grid: DyadicGrid, a: int, b: int, N: int) -> bool:
    """Scale comparability and proximity at tolerance 2^N."""
    la, lb = grid.ell(a), grid.ell(b)
    if not (2.0 ** (-N) * la <= lb <= 2.0 ** N * la):
        return False
    return grid.cube_dist(a, b) <= 2.0 ** N * (la + lb)


# ---------------------------------------------------------------------------
# verification


@dataclass
class GridReport:
    ok: bool
    C1: float
    Xi: float
    gamma: float
    additivity_gap: float
    checks: dict
    strip_fractions: dict

    def __bool__(self):
        return self.ok


def verify_grid(grid: DyadicGrid, taus=None) -> GridReport:
    """Re-check the tree invariants and measure the thin-strip exponent."""
    if taus is None:
        taus = [2.0 ** (-j) for j in range(1, 7)]
    checks = {}
    g = grid
    n = len(g.points)
    # partition at every generation: sample ranges tile [0, n)
    ok_part = True
    for gen in range(g.depth + 1):
        ids = g.cubes_at(gen)
        spans = sorted((int(g.sample_lo[i]), int(g.sample_hi[i])) for i in ids)
        covered = spans[0][0] == 0 and spans[-1][1] == n
        for (a0, a1), (b0, b1) in zip(spans[:-1], spans[1:]):
            covered &= a1 == b0
        ok_part &= covered
    checks["partition"] = bool(ok_part)
    # nesting and the unique ancestor per generation
    ok_nest = True
    for i in range(1, g.n_cubes):
        p = int(g.parent[i])
        ok_nest &= bool(
            g.sample_lo[p] <= g.sample_lo[i] and g.sample_hi[i] <= g.sample_hi[p]
        )
    checks["nesting"] = bool(ok_nest)
    checks["strict_split"] = all(len(c) != 1 for c in g.children)
    # ball containments with the measured C1, on samples
    r = g.ell0 * 2.0 ** (-g.gen.astype(float)) / (2.0 * g.C1)
    inner_ok = np.all(np.where(np.isfinite(g.rho_in), g.rho_in, np.inf) >= 2.0 * r - 1e-12)
    outer_ok = np.all(g.rho_out <= g.Xi * r + 1e-12)
    checks["ball_containment"] = bool(inner_ok and outer_ok)
    # sigma additivity along the tree
    sig = g.sigma_vector()
    gap = 0.0
    for i in range(g.n_cubes):
        if g.children[i]:
            gap = max(gap, abs(sig[i] - math.fsum(sig[c] for c in g.children[i])))
    checks["sigma_additive"] = gap == 0.0 or gap <= 1e-9 * max(1.0, sig[0])
    # thin strips: weight fraction of each cube within tau*l(Q) of its complement
    tree = g.sample_tree()
    strip = {}
    for gen in range(1, g.depth + 1):
        ids = g.cubes_at(gen)
        ell = g.ell0 * 2.0 ** (-gen)
        fracs = np.zeros((len(ids), len(taus)))
        for row, i in enumerate(ids):
            lo, hi = int(g.sample_lo[i]), int(g.sample_hi[i])
            pts = g.points[lo:hi]
            d_for = np.full(hi - lo, np.inf)
            todo = np.arange(hi - lo)
            k = 16
            while len(todo):
                kk = min(k, n)
                d, j = tree.query(pts[todo], k=kk)
                d, j = np.atleast_2d(d), np.atleast_2d(j)
                outside = (j < lo) | (j >= hi)
                has = outside.any(axis=1)
                first = np.argmax(outside, axis=1)
                d_for[todo[has]] = d[has, first[has]]
                todo = todo[~has]
                if kk == n:
                    break
                k *= 8
            w = g.weights[lo:hi]
            wtot = w.sum()
            for t_i, tau in enumerate(taus):
                fracs[row, t_i] = w[d_for <= tau * ell].sum() / wtot
        strip[gen] = fracs.max(axis=0)
    worst = np.max(np.stack([strip[gen] for gen in strip]), axis=0)
    pos = worst > 0
    if int(pos.sum()) >= 2:
        lt = np.log(np.array(taus))[pos]
        lf = np.log(worst[pos])
        gamma = float(np.polyfit(lt, lf, 1)[0])
    else:
        gamma = math.inf  # strips empty at every tested tau
    checks["strips_measured"] = True
    ok = all(bool(v) for v in checks.values())
    return GridReport(
        ok=ok,
        C1=g.C1,
        Xi=g.Xi,
        gamma=gamma,
        additivity_gap=gap,
        checks=checks,
        strip_fractions={int(g_): s.tolist() for g_, s in strip.items()},
    )
