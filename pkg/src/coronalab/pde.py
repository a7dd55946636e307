"""Walk-on-spheres estimators and exact-kernel oracles.

Monte Carlo here is deterministic by construction: paths run in fixed-size
chunks, each chunk drawing from a counter-based generator keyed by
(seed, chunk index), tallies are integers, and float reductions happen in a
fixed chunk order.  Reruns with the same seed reproduce every number bit for
bit.  Mass can only be lost: a path that exceeds the step cap is reported as
lost and never renormalised into the estimate.

On model boundaries (circle, flat line) the same quantities are available in
closed form; those exact oracles live here too so stochastic output can be
checked against them, and so downstream consumers can swap in assertion-grade
measures where the geometry allows it.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .dyadic import DiscreteMeasure, DyadicGrid
from .errors import (
    CoincidentPoints,
    ConfigError,
    FamilyNotDisjoint,
    LatticeTooCoarse,
    ModeParamMismatch,
    PathCapExceeded,
    PoleOnBoundary,
    PreconditionViolated,
)
from .geometry import Domain
from .kernels import disk_arc_measure, fundamental_solution, halfspace_interval_measure

CHUNK = 4096
DEFAULT_MAX_STEPS = 1_000_000


def _derive_seed(seed: int, tag) -> int:
    """Stable 63-bit stream key from a base seed and an arbitrary tag."""
    h = hashlib.blake2b(f"{seed}|{tag!r}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "big") >> 1


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    key = np.array([seed, chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def wos_exits(domain: Domain, x0, n_paths: int, seed: int, eps_stop: float,
              max_steps: int = DEFAULT_MAX_STEPS, chunk: int = CHUNK):
    """Run n_paths walk-on-spheres trajectories from x0.

    Each step jumps to a uniform point on the sphere of radius
    dist(P, boundary); a path stops when that distance drops to eps_stop and
    its position is projected to the nearest boundary point.  Returns
    (exits, lost, steps): exit points (NaN rows for lost paths), a lost mask,
    and per-path step counts.
    """
    x0 = np.asarray(x0, dtype=float)
    d = domain.dim
    exits = np.empty((n_paths, d))
    lost = np.zeros(n_paths, dtype=bool)
    steps = np.zeros(n_paths, dtype=np.int64)
    done = 0
    c_idx = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        rng = _chunk_rng(seed, c_idx)
        P = np.repeat(x0[None], m, axis=0)
        alive = np.arange(m)
        ex = np.full((m, d), np.nan)
        st = np.zeros(m, dtype=np.int64)
        it = 0
        while alive.size:
            dist = domain.boundary_distance(P[alive])
            hit = dist <= eps_stop
            if hit.any():
                ids = alive[hit]
                ex[ids] = domain.nearest_boundary(P[ids])[0]
                alive = alive[~hit]
                dist = dist[~hit]
            if not alive.size:
                break
            it += 1
            if it > max_steps:
                break
            u = rng.standard_normal((alive.size, d))
            u /= np.maximum(np.linalg.norm(u, axis=1), 1e-300)[:, None]
            P[alive] += dist[:, None] * u
            st[alive] += 1
        sl = slice(done, done + m)
        exits[sl] = ex
        steps[sl] = st
        if alive.size:
            lo = np.zeros(m, dtype=bool)
            lo[alive] = True
            lost[sl] = lo
        done += m
        c_idx += 1
    return exits, lost, steps


# ---------------------------------------------------------------------------
# target classifiers


class CubeTargets:
    """Pairwise-disjoint grid cubes; exits classified through the nearest
    boundary sample's leaf and its ancestor chain."""

    def __init__(self, grid: DyadicGrid, ids):
        ids = [int(q) for q in ids]
        for a in ids:
            for b in ids:
                if a != b and grid.is_ancestor(a, b):
                    raise FamilyNotDisjoint(f"target cube {a} contains {b}")
        self.grid = grid
        self.ids = ids
        self.labels = [str(q) for q in ids]
        self._owner = np.full(grid.n_cubes, -1, dtype=np.int64)
        for j, q in enumerate(ids):
            self._owner[q: grid.subtree_end[q]] = j

    def classify(self, pts) -> np.ndarray:
        if len(pts) == 0:
            return np.zeros(0, dtype=np.int64)
        _, idx = self.grid.sample_tree().query(np.asarray(pts, dtype=float), k=1)
        leaves = self.grid.leaf_of_sample[np.atleast_1d(idx)]
        return self._owner[leaves]


class CapTargets:
    """Spherical caps on a ball boundary, given as (axis, opening angle)."""

    def __init__(self, domain: Domain, caps):
        piece = domain.pieces[0]
        if domain.meta.get("shape") != "ball":
            raise ConfigError("cap targets only make sense on a ball boundary")
        self.center = np.asarray(piece.c, dtype=float)
        self.radius = float(piece.R)
        self.axes = []
        self.cos_alpha = []
        for axis, alpha in caps:
            a = np.asarray(axis, dtype=float)
            nrm = np.linalg.norm(a)
            if nrm == 0 or not 0 < alpha <= math.pi:
                raise ConfigError("cap needs a nonzero axis and alpha in (0, pi]")
            self.axes.append(a / nrm)
            self.cos_alpha.append(math.cos(alpha))
        self.labels = [f"cap{j}" for j in range(len(self.axes))]

    def classify(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        v = (pts - self.center) / self.radius
        out = np.full(len(pts), -1, dtype=np.int64)
        for j in range(len(self.axes) - 1, -1, -1):
            out[v @ self.axes[j] >= self.cos_alpha[j]] = j
        return out


class ComponentTargets:
    """Boundary components, classified by the nearest sample's component id."""

    def __init__(self, domain: Domain, components, resolution: float | None = None):
        h = resolution or domain.diam_boundary() / 512
        cloud = domain.sample_boundary(h)
        self._tree = cKDTree(cloud.points)
        self._comp = cloud.component
        self.components = [int(c) for c in components]
        self.labels = [f"component{c}" for c in self.components]
        self._index = {c: j for j, c in enumerate(self.components)}

    def classify(self, pts) -> np.ndarray:
        if len(pts) == 0:
            return np.zeros(0, dtype=np.int64)
        _, idx = self._tree.query(np.asarray(pts, dtype=float), k=1)
        comp = self._comp[np.atleast_1d(idx)]
        return np.array([self._index.get(int(c), -1) for c in comp], dtype=np.int64)


class RadiusTargets:
    """Single surface ball: exits within `radius` of a boundary point."""

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.labels = ["ball"]

    def classify(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        inside = np.linalg.norm(pts - self.center, axis=1) <= self.radius
        return np.where(inside, 0, -1).astype(np.int64)


# ---------------------------------------------------------------------------
# harmonic measure and Green values


@dataclass
class MeasureEstimate:
    pole: np.ndarray
    labels: list
    mass: np.ndarray
    ci: np.ndarray
    paths: int
    lost_mass: float
    eps_stop: float
    seed: int

    def __getitem__(self, label):
        j = self.labels.index(label) if not isinstance(label, int) else label
        return float(self.mass[j]), float(self.ci[j])

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def as_dict(self) -> dict:
        return {
            "pole": [float(v) for v in self.pole],
            "paths": self.paths,
            "seed": self.seed,
            "eps_stop": self.eps_stop,
            "lost_mass": self.lost_mass,
            "targets": [
                {"id": lab, "mass": float(m), "ci": float(c)}
                for lab, m, c in zip(self.labels, self.mass, self.ci)
            ],
        }


def _check_pole(domain: Domain, x, eps_stop: float | None):
    x = np.asarray(x, dtype=float)
    if not bool(domain.contains(x[None])[0]):
        raise PoleOnBoundary("pole is not an interior point")
    delta = float(domain.boundary_distance(x[None])[0])
    if eps_stop is None:
        eps_stop = 1e-4 * domain.diam_boundary()
    if not eps_stop < delta / 4:
        raise PoleOnBoundary(
            f"stopping shell {eps_stop:.3g} too thick for a pole at distance {delta:.3g}"
        )
    return x, float(eps_stop)


def harmonic_measure(domain: Domain, pole, targets, paths: int, seed: int,
                     eps_stop: float | None = None,
                     max_steps: int = DEFAULT_MAX_STEPS) -> MeasureEstimate:
    """Estimate the harmonic measure of each target from the given pole.

    Returns per-target mass with a 1.96-sigma binomial half-width.  Lost
    paths reduce every mass estimate (the walk never renormalises).
    """
    x, eps = _check_pole(domain, pole, eps_stop)
    exits, lost, _ = wos_exits(domain, x, paths, seed, eps, max_steps)
    if lost.all():
        raise PathCapExceeded("every path exceeded the step cap")
    lab = targets.classify(exits[~lost])
    k = len(targets.labels)
    counts = np.bincount(lab[lab >= 0], minlength=k).astype(float)
    mass = counts / paths
    ci = 1.96 * np.sqrt(mass * (1.0 - mass) / paths)
    return MeasureEstimate(
        pole=x, labels=list(targets.labels), mass=mass, ci=ci, paths=paths,
        lost_mass=float(lost.sum()) / paths, eps_stop=eps, seed=seed,
    )


@dataclass
class GreenEstimate:
    x: np.ndarray
    y: np.ndarray
    value: float
    ci: float
    paths: int
    lost: int
    seed: int


def green_value(domain: Domain, x, y, paths: int, seed: int,
                eps_stop: float | None = None,
                max_steps: int = DEFAULT_MAX_STEPS) -> GreenEstimate:
    """Green function estimate G(x, y) = Phi(x - y) - E[Phi(exit - y)].

    The correction averages over completed paths only; lost paths are
    counted and reported.
    """
    x, eps = _check_pole(domain, x, eps_stop)
    y = np.asarray(y, dtype=float)
    if not bool(domain.contains(y[None])[0]):
        raise PoleOnBoundary("second point is not interior")
    sep = float(np.linalg.norm(x - y))
    if sep < 1e-12 * domain.diam_boundary():
        raise CoincidentPoints("Green function evaluated on its diagonal")
    exits, lost, _ = wos_exits(domain, x, paths, seed, eps, max_steps)
    good = exits[~lost]
    if len(good) == 0:
        raise PathCapExceeded("every path exceeded the step cap")
    vals = fundamental_solution(domain.dim, good - y)
    est = fundamental_solution(domain.dim, x - y) - float(vals.mean())
    ci = 1.96 * float(vals.std(ddof=1)) / math.sqrt(len(vals)) if len(vals) > 1 else math.inf
    return GreenEstimate(x=x, y=y, value=est, ci=ci, paths=paths,
                         lost=int(lost.sum()), seed=seed)


# ---------------------------------------------------------------------------
# bounded harmonic solutions


@dataclass
class SolutionField:
    """u = harmonic extension of the indicator of a boundary set E, |u| <= 1.

    Either an exact closed form (value_fn / grad_fn) or a walk-on-spheres
    evaluator backed by a target classifier.  Values are cached per stable
    key so lattice sweeps pay for each node once.
    """

    domain: Domain
    kind: str  # "exact" | "wos"
    targets: object = None
    value_fn: object = None
    grad_fn: object = None
    seed: int = 0
    paths: int = 4000
    eps_stop: float | None = None
    max_steps: int = DEFAULT_MAX_STEPS
    empty: bool = False
    full: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def value(self, pts, keys=None):
        """(values, half-widths) at interior points; exact fields report 0 width."""
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None]
        if self.empty:
            return np.zeros(len(pts)), np.zeros(len(pts))
        if self.full:
            return np.ones(len(pts)), np.zeros(len(pts))
        if self.kind == "exact":
            return np.asarray(self.value_fn(pts), dtype=float), np.zeros(len(pts))
        vals = np.empty(len(pts))
        cis = np.empty(len(pts))
        for i, p in enumerate(pts):
            key = keys[i] if keys is not None else tuple(np.round(p, 12))
            hit = self._cache.get(key)
            if hit is None:
                est = harmonic_measure(
                    self.domain, p, self.targets, self.paths,
                    _derive_seed(self.seed, key), self.eps_stop, self.max_steps,
                )
                hit = (est.total, float(np.sqrt((est.ci ** 2).sum())))
                self._cache[key] = hit
            vals[i], cis[i] = hit
        return vals, cis

    def gradient(self, x, n_dirs: int = 96, r_frac: float = 0.5):
        """Sphere-average gradient at one interior point.

        For harmonic u the first spherical moment is exact:
        grad u = (d / r) * mean[u(x + r u_i) u_i] over uniform directions;
        antithetic +-u pairs cancel the even part.  Returns (gradient, err).
        """
        x = np.asarray(x, dtype=float)
        d = self.domain.dim
        if not bool(self.domain.contains(x[None])[0]):
            raise PreconditionViolated("gradient point must be interior")
        delta = float(self.domain.boundary_distance(x[None])[0])
        r = r_frac * delta
        rng = _chunk_rng(_derive_seed(self.seed, ("grad", tuple(np.round(x, 12)))), 0)
        u = rng.standard_normal((n_dirs, d))
        u /= np.linalg.norm(u, axis=1)[:, None]
        pts = np.concatenate([x + r * u, x - r * u])
        vals, cis = self.value(pts)
        vplus, vminus = vals[:n_dirs], vals[n_dirs:]
        per_dir = (d / (2.0 * r)) * (vplus - vminus)[:, None] * u
        grad = per_dir.mean(axis=0)
        spread = per_dir.std(axis=0, ddof=1) / math.sqrt(n_dirs)
        mc = (d / (2.0 * r)) * math.sqrt(float((cis ** 2).sum())) / n_dirs
        err = float(np.linalg.norm(1.96 * spread)) + mc
        return grad, err

    def gradient_sq(self, x, n_dirs: int = 96, r_frac: float = 0.5):
        """|grad u|^2 from the product of two independent half-estimates."""
        x = np.asarray(x, dtype=float)
        d = self.domain.dim
        if not bool(self.domain.contains(x[None])[0]):
            raise PreconditionViolated("gradient point must be interior")
        delta = float(self.domain.boundary_distance(x[None])[0])
        r = r_frac * delta
        half = max(n_dirs // 2, 4)
        out = []
        for part in (0, 1):
            rng = _chunk_rng(_derive_seed(self.seed, ("gsq", part, tuple(np.round(x, 12)))), 0)
            u = rng.standard_normal((half, d))
            u /= np.linalg.norm(u, axis=1)[:, None]
            pts = np.concatenate([x + r * u, x - r * u])
            vals, cis = self.value(pts)
            per_dir = (d / (2.0 * r)) * (vals[:half] - vals[half:])[:, None] * u
            g = per_dir.mean(axis=0)
            spread = per_dir.std(axis=0, ddof=1) / math.sqrt(half)
            mc = (d / (2.0 * r)) * math.sqrt(float((cis ** 2).sum())) / half
            out.append((g, float(np.linalg.norm(1.96 * spread)) + mc))
        (g1, e1), (g2, e2) = out
        val = float(g1 @ g2)
        err = float(np.linalg.norm(g1)) * e2 + float(np.linalg.norm(g2)) * e1 + e1 * e2
        return val, err


def boundary_solution(domain: Domain, targets=None, mode: str = "wos",
                      value_fn=None, grad_fn=None, seed: int = 0,
                      paths: int = 4000, eps_stop: float | None = None,
                      max_steps: int = DEFAULT_MAX_STEPS) -> SolutionField:
    """Harmonic extension of a boundary indicator.

    targets=None with mode="wos" means the full boundary (u = 1); a target
    object with no members gives the zero field, flagged `empty`.  With
    mode="exact" supply value_fn (and optionally grad_fn) instead.
    """
    if mode == "exact":
        if value_fn is None:
            raise ConfigError("exact mode needs a value function")
        return SolutionField(domain=domain, kind="exact", value_fn=value_fn,
                             grad_fn=grad_fn, seed=seed)
    if mode != "wos":
        raise ConfigError(f"unknown solution mode {mode!r}")
    if targets is None:
        return SolutionField(domain=domain, kind="wos", full=True, seed=seed)
    if len(targets.labels) == 0:
        return SolutionField(domain=domain, kind="wos", empty=True, seed=seed)
    return SolutionField(domain=domain, kind="wos", targets=targets, seed=seed,
                         paths=paths, eps_stop=eps_stop, max_steps=max_steps)


# ---------------------------------------------------------------------------
# lattice gradient energy


@dataclass
class EnergyEstimate:
    value: float
    refine_err: float
    region_err: float
    mc_err: float
    h: float
    n_nodes: int

    @property
    def err(self) -> float:
        return self.refine_err + self.region_err + self.mc_err


def gradient_energy(solution: SolutionField, center, radius: float, h: float) -> EnergyEstimate:
    """Integrate |grad u|^2 * dist(x, boundary) over the ball B(center, radius).

    Midpoint rule on a cubic lattice of spacing h centred at `center`;
    gradients are central differences of cached u values.  The same cached
    values power a spacing-2h pass whose difference gives the refinement
    error |I_h - I_2h| / 3; the content of cells straddling the sphere is
    reported separately as region_err, since their membership is what a
    lattice shift could flip.  Requires h <= (dist(center) - radius) / 8.
    """
    dom = solution.domain
    d = dom.dim
    c = np.asarray(center, dtype=float)
    if not bool(dom.contains(c[None])[0]):
        raise PreconditionViolated("integration ball must stay inside the domain")
    delta_c = float(dom.boundary_distance(c[None])[0])
    margin = delta_c - radius
    if margin <= 0:
        raise PreconditionViolated("integration ball must stay inside the domain")
    if h > margin / 8 * (1 + 1e-12):
        raise LatticeTooCoarse(
            f"spacing {h:.3g} exceeds an eighth of the clearance {margin:.3g}"
        )
    K = int(math.floor(radius / h))
    ax = np.arange(-K, K + 1)
    mesh = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    core = mesh[(mesh * mesh).sum(axis=1) * h * h <= radius * radius * (1 + 1e-12)]
    core_keys = [tuple(int(v) for v in k) for k in core]
    even = core[np.all(core % 2 == 0, axis=1)]
    even_keys = [tuple(int(v) for v in k) for k in even]

    need = set(core_keys) | set(even_keys)
    for ks, step in ((core_keys, 1), (even_keys, 2)):
        for k in ks:
            for j in range(d):
                for s in (-step, step):
                    kk = list(k)
                    kk[j] += s
                    need.add(tuple(kk))
    keys = sorted(need)
    nodes = c + h * np.array(keys, dtype=float)
    if not bool(dom.contains(nodes).all()):
        raise PreconditionViolated("stencil node escaped the domain")
    vals, cis = solution.value(nodes, keys=[("latt",) + k for k in keys])
    at = {k: i for i, k in enumerate(keys)}

    def sweep(members, step):
        pts = c + h * np.array(members, dtype=float)
        deltas = dom.boundary_distance(pts)
        cell = (step * h) ** d
        tot = 0.0
        mc = 0.0
        strip = 0.0
        half_diag = step * h * math.sqrt(d) / 2
        for k, dl, pt in zip(members, deltas, pts):
            g2 = 0.0
            gci = 0.0
            for j in range(d):
                kp = list(k)
                kp[j] += step
                km = list(k)
                km[j] -= step
                ip, im = at[tuple(kp)], at[tuple(km)]
                g = (vals[ip] - vals[im]) / (2 * step * h)
                g2 += g * g
                gci += 2.0 * abs(g) * (cis[ip] + cis[im]) / (2 * step * h)
            tot += g2 * dl * cell
            mc += gci * dl * cell
            if abs(np.linalg.norm(pt - c) - radius) <= half_diag:
                strip += g2 * dl * cell
        return tot, mc, strip

    i_h, mc_h, strip_h = sweep(core_keys, 1)
    i_2h, _, _ = sweep(even_keys, 2)
    return EnergyEstimate(value=float(i_h), refine_err=abs(i_h - i_2h) / 3.0,
                          region_err=float(strip_h), mc_err=float(mc_h),
                          h=h, n_nodes=len(core_keys))


# ---------------------------------------------------------------------------
# exact oracles on model boundaries


def _structural_param_interval(grid: DyadicGrid, q: int, lo0: float, length: float):
    g = int(grid.gen[q])
    width = 2 ** (grid.depth - g)
    k = int(grid.leaf_lo[q]) // width
    return lo0 + length * k / 2 ** g, lo0 + length * (k + 1) / 2 ** g


def cube_param_interval(grid: DyadicGrid, q: int):
    """Exact parameter interval of a cube on a circle or flat-line grid.

    Cube trees on these boundaries halve the arclength parameter exactly, so
    the interval follows from the cube's generation and its left-to-right
    rank alone.
    """
    shape = grid.meta.get("shape")
    piece = grid.domain.pieces[0]
    if shape == "ball" and grid.domain.dim == 2:
        return _structural_param_interval(grid, q, 0.0, 2 * math.pi)
    if shape == "half_space" and grid.domain.dim == 2 and piece.height is None:
        return _structural_param_interval(grid, q, -piece.window / 2, piece.window)
    raise ConfigError(f"no exact parameterisation for shape {shape!r}")


def exact_harmonic_measure(domain: Domain, grid: DyadicGrid, pole) -> DiscreteMeasure:
    """Closed-form harmonic measure of every leaf, as a discrete measure.

    Circle: Mobius image-arc spans.  Flat line: angle subtended at the pole.
    Leaf masses are exact, so every cube mass (a contiguous leaf sum) is too.
    """
    pole = np.asarray(pole, dtype=float)
    shape = grid.meta.get("shape")
    piece = domain.pieces[0]
    n = len(grid.leaves)
    if shape == "ball" and domain.dim == 2:
        z = complex(*(pole - piece.c)) / piece.R
        if abs(z) >= 1.0:
            raise PoleOnBoundary("pole must lie inside the disk")
        breaks = 2 * math.pi * np.arange(n + 1) / n
        w = np.exp(1j * breaks)
        img = np.angle((w - z) / (1.0 - np.conj(z) * w))
        masses = np.mod(np.diff(img), 2 * math.pi) / (2 * math.pi)
        return DiscreteMeasure(grid, masses)
    if shape == "half_space" and domain.dim == 2 and piece.height is None:
        x0, y0 = pole
        if y0 <= 0:
            raise PoleOnBoundary("pole must lie above the boundary line")
        w = piece.window
        breaks = -w / 2 + w * np.arange(n + 1) / n
        ang = np.arctan2(breaks - x0, y0)
        masses = np.diff(ang) / math.pi
        return DiscreteMeasure(grid, masses)
    raise ConfigError(f"no exact harmonic-measure oracle for shape {shape!r}")


def exact_cube_solution(domain: Domain, grid: DyadicGrid, ids) -> SolutionField:
    """Exact harmonic extension of the indicator of a union of cubes, on
    boundaries with a closed-form kernel (circle, flat line)."""
    shape = grid.meta.get("shape")
    piece = domain.pieces[0]
    intervals = [cube_param_interval(grid, int(q)) for q in ids]
    if shape == "ball":
        c0, R = piece.c, piece.R

        def value_fn(pts):
            return np.array([
                sum(disk_arc_measure(c0, R, p, a, b) for a, b in intervals)
                for p in np.asarray(pts, dtype=float)
            ])
    else:

        def value_fn(pts):
            return np.array([
                sum(halfspace_interval_measure(p, a, b) for a, b in intervals)
                for p in np.asarray(pts, dtype=float)
            ])

    return boundary_solution(domain, mode="exact", value_fn=value_fn)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class DiagnosticReport:
    mode: str
    value: float
    table: list
    params: dict


_MODE_PARAMS = {
    "bourgain": {"surface_point", "radius", "poles", "paths", "seed", "measure_fn"},
    "cfms": {"pairs", "paths", "seed", "green_fn", "measure_fn"},
    "holder_decay": {"surface_point", "radius", "distances", "direction", "paths", "seed",
                     "measure_fn"},
    "green_symmetry": {"pairs", "paths", "seed"},
}


def pde_diagnostics(domain: Domain, mode: str, params: dict) -> DiagnosticReport:
    """Scenario checks on the estimators.

    bourgain: min over supplied poles of the measure of a surface ball, the
    poles sitting well inside the ball's scale.  cfms: max over pairs of
    [G(x, y)/dist(y)] / [measure density of the surface ball at y's foot].
    holder_decay: log-log slope of u vanishing on a surface ball as the pole
    approaches its centre.  green_symmetry: worst standardised asymmetry
    |G(x,y) - G(y,x)| over repeated estimates.
    """
    if mode not in _MODE_PARAMS:
        raise ModeParamMismatch(f"unknown diagnostic mode {mode!r}")
    extra = set(params) - _MODE_PARAMS[mode]
    if extra:
        raise ModeParamMismatch(f"parameters {sorted(extra)} do not belong to mode {mode!r}")
    paths = int(params.get("paths", 20000))
    seed = int(params.get("seed", 0))
    echo = {k: v for k, v in params.items() if not callable(v)}

    if mode == "bourgain":
        x = np.asarray(params["surface_point"], dtype=float)
        r = float(params["radius"])
        fn = params.get("measure_fn")
        table = []
        for j, pole in enumerate(params["poles"]):
            if fn is not None:
                m, ci = float(fn(np.asarray(pole, dtype=float))), 0.0
            else:
                est = harmonic_measure(domain, pole, RadiusTargets(x, r), paths,
                                       _derive_seed(seed, ("bourgain", j)))
                m, ci = est["ball"]
            table.append({"pole": list(map(float, pole)), "mass": m, "ci": ci})
        return DiagnosticReport(mode, min(t["mass"] for t in table), table, echo)

    if mode == "cfms":
        gfn = params.get("green_fn")
        mfn = params.get("measure_fn")
        table = []
        for j, (x, y) in enumerate(params["pairs"]):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            dy = float(domain.boundary_distance(y[None])[0])
            if np.linalg.norm(x - y) < dy / 2:
                raise PreconditionViolated("pair too close for the comparison ratio")
            foot = domain.nearest_boundary(y[None])[0][0]
            sigma = domain.surface_ball_measure(foot, 2 * dy)
            if gfn is not None:
                g = float(gfn(x, y))
            else:
                g = green_value(domain, x, y, paths, _derive_seed(seed, ("cg", j))).value
            if mfn is not None:
                m = float(mfn(x, foot, 2 * dy))
            else:
                est = harmonic_measure(domain, x, RadiusTargets(foot, 2 * dy), paths,
                                       _derive_seed(seed, ("cm", j)))
                m = est["ball"][0]
            if m <= 0:
                raise PreconditionViolated("surface ball carries no measure from this pole")
            ratio = (g / dy) / (m / sigma)
            table.append({"green": g, "mass": m, "sigma": sigma, "ratio": float(ratio)})
        return DiagnosticReport(mode, max(t["ratio"] for t in table), table, echo)

    if mode == "holder_decay":
        x = np.asarray(params["surface_point"], dtype=float)
        r = float(params["radius"])
        direction = np.asarray(params["direction"], dtype=float)
        direction = direction / np.linalg.norm(direction)
        fn = params.get("measure_fn")
        table = []
        for j, t in enumerate(params["distances"]):
            pole = x + float(t) * direction
            if fn is not None:
                u = 1.0 - float(fn(pole))
            else:
                est = harmonic_measure(domain, pole, RadiusTargets(x, r), paths,
                                       _derive_seed(seed, ("hold", j)))
                u = 1.0 - est["ball"][0] - est.lost_mass
            table.append({"distance": float(t), "u": max(u, 1e-300)})
        lt = np.log([row["distance"] for row in table])
        lu = np.log([row["u"] for row in table])
        slope = float(np.polyfit(lt, lu, 1)[0])
        return DiagnosticReport(mode, slope, table, echo)

    # green_symmetry
    table = []
    for j, (x, y) in enumerate(params["pairs"]):
        a = green_value(domain, x, y, paths, _derive_seed(seed, ("gs", j, 0)))
        b = green_value(domain, y, x, paths, _derive_seed(seed, ("gs", j, 1)))
        ci = math.hypot(a.ci, b.ci)
        z = abs(a.value - b.value) / ci if ci > 0 else math.inf
        table.append({"forward": a.value, "backward": b.value, "ci": ci, "z": float(z)})
    return DiagnosticReport(mode, max(t["z"] for t in table), table, echo)
