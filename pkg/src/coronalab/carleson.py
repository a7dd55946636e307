"""Carleson-type functionals on dyadic boundary grids.

Four families of measurements share this module: packing norms of
cube-indexed mass assignments, truncated-cone energies of harmonic
extensions, oscillation and divergence functionals of matrix coefficient
fields, and discrete reverse Holder ratios of boundary densities.

Every volume integral is a Whitney-cube-wise midpoint rule with per-cube
two-level refinement until the change drops below a relative tolerance.
Boundary distances are exact, so the reported quadrature error has three
sources only: the refinement residual, cells straddling the window
sphere, and the unresolved collar at the resolution floor.  Ball
suprema use a fixed deterministic low-discrepancy net so reruns agree
to the bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .dyadic import DiscreteMeasure, DyadicGrid
from .errors import (
    BadCorkscrewFamily,
    ConfigError,
    LatticeTooCoarse,
    MissingDerivative,
    NotAntisymmetric,
    PoleMissing,
    PreconditionViolated,
)
from .geometry import Domain
from .pde import SolutionField, gradient_energy
from .whitney import build_whitney

FUNCTIONAL_IDS = ("fkp", "divC", "gradL1", "osc", "kp2", "linf_grad",
                  "partial_cme", "full_cme", "packing", "rh")

_COEFF_IDS = ("fkp", "divC", "gradL1", "osc", "kp2", "linf_grad")


# ---------------------------------------------------------------------------
# cube-indexed masses and the packing norm


class DiscreteCarlesonMeasure:
    """A nonnegative mass alpha_Q attached to every cube of a grid."""

    def __init__(self, grid: DyadicGrid, alpha):
        a = np.asarray(alpha, dtype=float)
        if a.shape != (grid.n_cubes,):
            raise ConfigError(
                f"alpha has {a.shape} entries, grid has {grid.n_cubes} cubes")
        if (a < 0).any():
            raise ConfigError("cube masses must be nonnegative")
        self.grid = grid
        self.alpha = a

    @classmethod
    def from_cubes(cls, grid, cubes, weights=None):
        """Surface measure (or given weights) charged on the listed cubes."""
        a = np.zeros(grid.n_cubes)
        ids = np.asarray(list(cubes), dtype=int)
        if weights is None:
            a[ids] = grid.sigma_vector()[ids]
        else:
            a[ids] = np.asarray(weights, dtype=float)
        return cls(grid, a)

    def __add__(self, other):
        if other.grid is not self.grid:
            raise ConfigError("measures live on different grids")
        return DiscreteCarlesonMeasure(self.grid, self.alpha + other.alpha)


def _alpha_of(grid, m):
    if isinstance(m, DiscreteCarlesonMeasure):
        if m.grid is not grid:
            raise ConfigError("measure was built on a different grid")
        return m.alpha
    a = np.asarray(m, dtype=float)
    if a.shape != (grid.n_cubes,):
        raise ConfigError("alpha vector length does not match the grid")
    if (a < 0).any():
        raise ConfigError("cube masses must be nonnegative")
    return a


def packing_ratios(grid: DyadicGrid, m, roots=None):
    """Subtree mass over sigma for each candidate root, one exact pass.

    Children appear after their parent in the cube order, so a single
    reversed sweep pushes every subtree total onto its parent.
    """
    a = _alpha_of(grid, m)
    s = a.copy()
    par = grid.parent
    for i in range(grid.n_cubes - 1, 0, -1):
        s[par[i]] += s[i]
    if roots is None:
        roots = np.arange(grid.n_cubes)
    else:
        roots = np.asarray(list(roots), dtype=int)
        if len(roots) == 0:
            raise ConfigError("empty root set")
    sig = grid.sigma_vector()[roots]
    return roots, s[roots] / sig


def packing_norm(grid: DyadicGrid, m, roots=None) -> float:
    """sup over cubes R of (1/sigma(R)) * sum of alpha over the subtree of R."""
    _, ratios = packing_ratios(grid, m, roots)
    return float(ratios.max())


# ---------------------------------------------------------------------------
# reports


@dataclass
class CarlesonReport:
    """Per-window values of one functional plus their exact supremum."""

    functional: str
    window_ids: list
    values: np.ndarray
    sup: float
    argmax: str
    quad_err: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.functional not in FUNCTIONAL_IDS:
            raise ConfigError(f"unknown functional id {self.functional!r}")
        v = np.asarray(self.values, dtype=float)
        if len(v) == 0:
            raise ConfigError("report must carry at least one window")
        k = int(np.argmax(v))
        if not (self.sup == float(v[k]) and self.argmax == self.window_ids[k]):
            raise ConfigError("sup/argmax inconsistent with the value table")

    @classmethod
    def build(cls, functional, window_ids, values, errs=None, meta=None):
        v = np.asarray(values, dtype=float)
        if len(v) == 0:
            raise ConfigError("report must carry at least one window")
        k = int(np.argmax(v))
        qe = 0.0 if errs is None else float(np.asarray(errs, dtype=float)[k])
        return cls(functional=functional, window_ids=list(window_ids), values=v,
                   sup=float(v[k]), argmax=window_ids[k], quad_err=qe,
                   meta=dict(meta or {}))

    def rows(self):
        return [(wid, float(v)) for wid, v in zip(self.window_ids, self.values)]

    def as_dict(self):
        return {
            "functional": self.functional,
            "sup": self.sup,
            "argmax": self.argmax,
            "quad_err": self.quad_err,
            "values": {wid: float(v) for wid, v in self.rows()},
            "meta": {k: v for k, v in self.meta.items() if _jsonable(v)},
        }


def _jsonable(v):
    return isinstance(v, (str, int, float, bool, type(None), list, tuple, dict))


# ---------------------------------------------------------------------------
# windowed volume quadrature


_NET_CACHE = {}


def _unit_ball_net(dim: int, doubled: bool = False):
    """Fixed low-discrepancy points in the closed unit ball, origin first."""
    key = (dim, bool(doubled))
    hit = _NET_CACHE.get(key)
    if hit is None:
        n = 64 if doubled else 32
        raw = qmc.Halton(d=dim, scramble=False).random(16 * n)
        pts = 2.0 * raw - 1.0
        pts = pts[(pts * pts).sum(axis=1) <= 1.0][: n - 1]
        hit = np.concatenate([np.zeros((1, dim)), pts])
        _NET_CACHE[key] = hit
    return hit


def _ball_cube_ids(W, x, r):
    near = np.clip(x, W.lo, W.hi)
    d2 = ((near - x[None]) ** 2).sum(axis=1)
    return np.flatnonzero(d2 <= r * r * (1 + 1e-12))


def _cube_midpoint(dom, W, q, fn, x, r, rel_tol, max_refine):
    """Midpoint sums over one Whitney cube clipped to the ball B(x, r).

    Cells belong to the ball by their center; the lattice is refined
    2x per axis until the two-level change is below rel_tol.  Returns
    (value, last two-level difference, content of sphere-straddling cells).
    """
    lo = W.lo[q]
    side = float(W.side[q])
    d = W.dim
    m = 1
    prev = None
    val = diff = strip = 0.0
    for _ in range(max_refine + 1):
        hh = side / m
        ax = np.arange(m)
        idx = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
        P = lo[None, :] + (idx + 0.5) * hh
        dist_x = np.sqrt(((P - x[None]) ** 2).sum(axis=1))
        inside = dist_x <= r
        strad = np.abs(dist_x - r) <= hh * math.sqrt(d) / 2
        use = inside | strad
        cell = hh ** d
        if not use.any():
            val, strip = 0.0, 0.0
            diff = 0.0 if prev is None else abs(prev)
            break
        f = np.zeros(len(P))
        deltas = dom.boundary_distance(P[use])
        f[use] = fn(P[use], deltas)
        val = float(f[inside].sum() * cell)
        strip = float(np.abs(f[strad]).sum() * cell)
        if prev is not None:
            diff = abs(val - prev)
            if diff <= rel_tol * max(abs(val), 1e-300):
                break
        prev = val
        m *= 2
    return val, diff, strip


def ball_quadrature(domain: Domain, x, r, fn, min_len=None, rel_tol=0.01,
                    max_refine=6, whitney=None):
    """Integrate fn(points, boundary distances) over B(x, r) cap Omega.

    The region is tiled by a Whitney decomposition built over the window's
    bounding box (cells subdivide toward the true boundary, so the exact
    distance weight never sees a cell larger than its clearance).  Error
    parts: `refine` two-level residuals, `strip` sphere-straddling cell
    content, `floor` the contribution of floor-size cubes when the
    decomposition hit its resolution cutoff.
    """
    x = np.asarray(x, dtype=float)
    r = float(r)
    if r <= 0:
        raise ConfigError("window radius must be positive")
    W = whitney
    if W is None:
        if min_len is None:
            min_len = r / 64.0
        pad = 1.1 * r
        W = build_whitney(domain, bbox=(x - pad, x + pad), min_len=min_len)
    ids = _ball_cube_ids(W, x, r)
    total = refine = strip = floor_term = 0.0
    floor_side = 2.0 * W.min_len
    for q in ids:
        v, df, st = _cube_midpoint(domain, W, int(q), fn, x, r, rel_tol, max_refine)
        total += v
        refine += df
        strip += st
        if W.cutoff_hit and W.side[q] < floor_side:
            floor_term += abs(v)
    parts = {"refine": refine, "strip": strip, "floor": floor_term,
             "err": refine + strip + floor_term, "n_cubes": int(len(ids))}
    return total, parts


def _solution_gradient(solution: SolutionField, P, step_frac: float = 1.0 / 16):
    """Gradient of the harmonic extension at interior points.

    Analytic when the field carries one; otherwise central differences of
    the value oracle at a step proportional to the boundary clearance.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if solution.grad_fn is not None:
        return np.asarray(solution.grad_fn(P), dtype=float), np.zeros(len(P))
    dom = solution.domain
    d = dom.dim
    step = step_frac * np.asarray(dom.boundary_distance(P), dtype=float)
    g = np.empty((len(P), d))
    werr = np.zeros(len(P))
    for j in range(d):
        e = np.zeros(d)
        e[j] = 1.0
        vp, cp = solution.value(P + step[:, None] * e[None])
        vm, cm = solution.value(P - step[:, None] * e[None])
        g[:, j] = (vp - vm) / (2.0 * step)
        werr += ((cp + cm) / (2.0 * step)) ** 2
    return g, np.sqrt(werr)


# ---------------------------------------------------------------------------
# Carleson measure of the full gradient square


def full_cme(domain: Domain, solution: SolutionField, windows, min_len=None,
             rel_tol=0.01, max_refine=6) -> CarlesonReport:
    """Windowed energy density sup_(x,r) r^(1-d) * int |grad u|^2 dist dX.

    Each window (x, r) integrates over B(x, r) cap Omega and normalizes by
    r to the boundary dimension.  The solution is a harmonic-extension
    field with values in [0, 1], so no extra normalization is applied.
    """
    windows = list(windows)
    if not windows:
        raise ConfigError("no windows given")
    n_bdry = domain.dim - 1

    def f(P, deltas):
        g, _ = _solution_gradient(solution, P)
        return (g * g).sum(axis=1) * deltas

    ids, vals, errs, meta_rows = [], [], [], []
    for i, (x, r) in enumerate(windows):
        wid = f"w{i:03d}"
        value, parts = ball_quadrature(domain, x, r, f, min_len=min_len,
                                       rel_tol=rel_tol, max_refine=max_refine)
        scale = float(r) ** n_bdry
        ids.append(wid)
        vals.append(value / scale)
        errs.append(parts["err"] / scale)
        meta_rows.append({"id": wid, "x": [float(c) for c in np.atleast_1d(x)],
                          "r": float(r), "n_cubes": parts["n_cubes"]})
    return CarlesonReport.build("full_cme", ids, vals, errs,
                                meta={"windows": meta_rows, "rel_tol": rel_tol})


# ---------------------------------------------------------------------------
# truncated-cone (corkscrew ball) energy


def corkscrew_family(domain: Domain, grid: DyadicGrid, cubes, c: float = 0.25):
    """Interior points over cube centers at the cube's own length scale."""
    from .geometry import corkscrew_point

    out = {}
    for q in cubes:
        q = int(q)
        cp = corkscrew_point(domain, grid.center[q], grid.ell(q), c=c)
        out[q] = np.asarray(cp.point, dtype=float)
    return out


def partial_cme(grid: DyadicGrid, solution: SolutionField, points, tau: float,
                Q0_sweep, h: float) -> CarlesonReport:
    """sup over top cubes Q0 of (1/sigma(Q0)) * sum over Q below Q0 of the
    gradient energy on the ball B(P_Q, (1-tau) delta(P_Q)).

    `points` maps cube id -> interior point; each must sit at the cube's
    own scale (distance and clearance within a factor 4 of the cube
    length).  `h` is the lattice spacing relative to delta(P_Q), so
    shrinking tau keeps the very same lattice and enlarges the ball:
    monotonicity in tau is exact set inclusion, not a numerical accident.
    """
    if not 0.0 < tau < 0.5:
        raise PreconditionViolated("tau must lie in (0, 1/2)")
    if h <= 0:
        raise ConfigError("lattice spacing must be positive")
    if h > tau / 8.0 * (1 + 1e-12):
        raise LatticeTooCoarse(
            f"relative spacing {h:.3g} exceeds tau/8 = {tau / 8:.3g}")
    tops = [int(q) for q in Q0_sweep]
    if not tops:
        raise ConfigError("empty window sweep")
    dom = solution.domain
    union = sorted({int(q) for t in tops for q in grid.descendants(t)})

    P = {}
    deltas = {}
    offenders = []
    for q in union:
        if q not in points:
            raise ConfigError(f"no interior point supplied for cube {q}")
        p = np.asarray(points[q], dtype=float)
        ell = grid.ell(q)
        dl = float(dom.boundary_distance(p[None])[0])
        lo_s, hi_s = int(grid.sample_lo[q]), int(grid.sample_hi[q])
        gap = float(np.sqrt(((grid.points[lo_s:hi_s] - p[None]) ** 2).sum(axis=1).min()))
        ok = (ell / 4.0 <= dl * (1 + 1e-9) and dl <= 4.0 * ell * (1 + 1e-9)
              and gap <= 4.0 * ell * (1 + 1e-9))
        if not ok:
            offenders.append(q)
        P[q] = p
        deltas[q] = dl
    if offenders:
        raise BadCorkscrewFamily(
            f"{len(offenders)} cube points violate the factor-4 scale match",
            offenders)

    energy = {}
    err = {}
    for q in union:
        en = gradient_energy(solution, P[q], (1.0 - tau) * deltas[q],
                             h * deltas[q])
        energy[q] = en.value
        err[q] = en.err

    sig = grid.sigma_vector()
    ids, vals, errs = [], [], []
    for t in tops:
        sub = grid.descendants(t)
        s = float(sum(energy[int(q)] for q in sub))
        e = float(sum(err[int(q)] for q in sub))
        ids.append(f"Q{t}")
        vals.append(s / sig[t])
        errs.append(e / sig[t])
    return CarlesonReport.build(
        "partial_cme", ids, vals, errs,
        meta={"tau": float(tau), "h": float(h), "n_cubes": len(union)})


# ---------------------------------------------------------------------------
# coefficient fields


class CoefficientField:
    """Matrix coefficient A(X): batched values, optional analytic gradient.

    matrix_fn maps (n, d) points to (n, d, d) matrices; grad_fn, when
    given, maps points to (n, d, d, d) with entry [.., i, j, k] equal to
    the k-th partial of A_ij.  `ellipticity` is a claimed two-sided
    bound checked by probing; None skips the check.
    """

    def __init__(self, dim: int, matrix_fn, grad_fn=None, ellipticity=None):
        self.dim = int(dim)
        self.matrix_fn = matrix_fn
        self.grad_fn = grad_fn
        if ellipticity is not None and ellipticity < 1.0:
            raise ConfigError("ellipticity bound must be at least 1")
        self.ellipticity = ellipticity

    def __call__(self, P):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        A = np.asarray(self.matrix_fn(P), dtype=float)
        if A.shape != (len(P), self.dim, self.dim):
            raise ConfigError("matrix function returned a wrong shape")
        return A

    @classmethod
    def constant(cls, M, ellipticity=None):
        M = np.asarray(M, dtype=float)
        d = M.shape[0]
        return cls(d, lambda P: np.broadcast_to(M, (len(P), d, d)).copy(),
                   grad_fn=lambda P: np.zeros((len(P), d, d, d)),
                   ellipticity=ellipticity)

    @classmethod
    def perturbation(cls, dim, b_fn, E, grad_b_fn=None, ellipticity=None):
        """A = I + b(X) E for a scalar profile b and a fixed matrix E."""
        E = np.asarray(E, dtype=float)
        eye = np.eye(dim)

        def mat(P):
            b = np.asarray(b_fn(P), dtype=float)
            return eye[None] + b[:, None, None] * E[None]

        grad = None
        if grad_b_fn is not None:
            def grad(P):
                gb = np.asarray(grad_b_fn(P), dtype=float)  # (n, d)
                return E[None, :, :, None] * gb[:, None, None, :]

        return cls(dim, mat, grad_fn=grad, ellipticity=ellipticity)

    def gradient(self, P, deltas, allow_fd=True, step_frac=1.0 / 32):
        """(n, d, d, d) partials, analytic or centered differences.

        The difference step is delta(X)/32 so probes stay well inside
        the domain whenever X does.
        """
        P = np.atleast_2d(np.asarray(P, dtype=float))
        if self.grad_fn is not None:
            G = np.asarray(self.grad_fn(P), dtype=float)
            if G.shape != (len(P), self.dim, self.dim, self.dim):
                raise ConfigError("gradient function returned a wrong shape")
            return G
        if not allow_fd:
            raise MissingDerivative(
                "field has no analytic gradient and differencing is disabled")
        step = step_frac * np.asarray(deltas, dtype=float)
        G = np.empty((len(P), self.dim, self.dim, self.dim))
        for k in range(self.dim):
            e = np.zeros(self.dim)
            e[k] = 1.0
            Ap = self(P + step[:, None] * e[None])
            Am = self(P - step[:, None] * e[None])
            G[:, :, :, k] = (Ap - Am) / (2.0 * step)[:, None, None]
        return G

    def check_ellipticity(self, P, n_dirs: int = 8):
        """Probe xi . A xi against the claimed bound at the given points."""
        if self.ellipticity is None:
            return
        lam = float(self.ellipticity)
        A = self(P)
        rng = np.random.Generator(np.random.Philox(key=0xE11))
        xi = rng.standard_normal((n_dirs, self.dim))
        xi /= np.linalg.norm(xi, axis=1)[:, None]
        quad = np.einsum("nij,kj,ki->nk", A, xi, xi)
        tol = 1e-9
        if (quad < 1.0 / lam - tol).any() or (quad > lam + tol).any():
            raise ConfigError(
                f"coefficient field violates the claimed ellipticity {lam}")


def _frob(M, axes):
    return np.sqrt((M * M).sum(axis=axes))


def coefficient_carleson(domain: Domain, fields, functional: str, windows,
                         h=None, allow_fd=True, antisym=None,
                         refine_nets=False, rel_tol=0.01, max_refine=6,
                         min_len=None) -> CarlesonReport:
    """Windowed Carleson functionals of matrix coefficients.

    fields: one CoefficientField, or a pair (A0, A1) for the comparison
    functional ``fkp``.  Windows are (x, r) with x on the boundary; all
    volume integrals are normalized by the surface measure of
    B(x, r) cap boundary.  ``linf_grad`` is a supremum, not an integral,
    and is left unnormalized.  `h` caps the coarsest quadrature cell.
    """
    if functional not in _COEFF_IDS:
        raise ConfigError(f"unknown coefficient functional {functional!r}")
    windows = list(windows)
    if not windows:
        raise ConfigError("no windows given")

    if functional == "fkp":
        if not (isinstance(fields, (tuple, list)) and len(fields) == 2):
            raise ConfigError("fkp compares a pair of coefficient fields")
        A0, A1 = fields
        probe_fields = [A0, A1]
    else:
        if isinstance(fields, (tuple, list)):
            raise ConfigError(f"{functional} takes a single coefficient field")
        A0, A1 = fields, None
        probe_fields = [fields]

    C = None
    if antisym is not None:
        if functional != "divC":
            raise ConfigError("an antisymmetric part only feeds divC")
        C = antisym

    net = _unit_ball_net(domain.dim, doubled=refine_nets)

    def net_points(P, deltas):
        # every probe ball B(X, delta/2) stays inside the domain
        return (P[:, None, :] + 0.5 * deltas[:, None, None] * net[None]).reshape(-1, domain.dim)

    if functional == "fkp":
        def fn(P, deltas):
            Y = net_points(P, deltas)
            diff = A0(Y) - A1(Y)
            rho = _frob(diff, (1, 2)).reshape(len(P), -1).max(axis=1)
            return rho * rho / deltas
    elif functional == "osc":
        def fn(P, deltas):
            Y = net_points(P, deltas)
            vals = A0(Y).reshape(len(P), len(net), -1)
            diam = np.zeros(len(P))
            for a in range(len(net)):
                d2 = ((vals - vals[:, a:a + 1, :]) ** 2).sum(axis=2)
                diam = np.maximum(diam, np.sqrt(d2.max(axis=1)))
            return diam / deltas
    elif functional == "divC":
        if C is not None:
            def fn(P, deltas):
                M = C(P)
                if np.abs(M + np.swapaxes(M, 1, 2)).max() > 1e-9:
                    raise NotAntisymmetric("supplied part is not antisymmetric")
                G = C.gradient(P, deltas, allow_fd=allow_fd)
                div = np.einsum("nijj->ni", G)
                return (div * div).sum(axis=1) * deltas
        else:
            def fn(P, deltas):
                G = A0.gradient(P, deltas, allow_fd=allow_fd)
                div = np.einsum("nijj->ni", G) - np.einsum("njij->ni", G)
                return (div * div).sum(axis=1) * deltas
    elif functional in ("gradL1", "kp2", "linf_grad"):
        def fn(P, deltas):
            G = A0.gradient(P, deltas, allow_fd=allow_fd)
            mag = _frob(G, (1, 2, 3))
            if functional == "gradL1":
                return mag
            if functional == "kp2":
                return mag * mag * deltas
            return mag * deltas

    ids, vals, errs, meta_rows = [], [], [], []
    for i, (x, r) in enumerate(windows):
        x = np.asarray(x, dtype=float)
        r = float(r)
        wid = f"w{i:03d}"
        ml = min_len if min_len is None or h is None else min(min_len, h)
        if ml is None and h is not None:
            ml = min(r / 64.0, h)
        if functional == "linf_grad":
            value, err = _ball_sup(domain, x, r, fn, ml)
        else:
            sig = float(domain.surface_ball_measure(x, r))
            if sig <= 0:
                raise ConfigError("window must be centred on the boundary")
            raw, parts = ball_quadrature(domain, x, r, fn, min_len=ml,
                                         rel_tol=rel_tol, max_refine=max_refine)
            value, err = raw / sig, parts["err"] / sig
        ids.append(wid)
        vals.append(value)
        errs.append(err)
        meta_rows.append({"id": wid, "x": [float(c) for c in x], "r": r})

    # claimed ellipticity is probed on each window's net points
    for (x, r) in windows:
        x = np.asarray(x, dtype=float)
        probes = x[None] + 0.5 * float(r) * net
        keep = domain.contains(probes)
        if keep.any():
            for fld in probe_fields:
                fld.check_ellipticity(probes[keep])

    return CarlesonReport.build(functional, ids, vals, errs,
                                meta={"windows": meta_rows,
                                      "net_size": len(net)})


def _ball_sup(domain, x, r, fn, min_len):
    """sup of fn over B(x, r) cap Omega on two nested cell resolutions."""
    if min_len is None:
        min_len = r / 64.0
    pad = 1.1 * r
    W = build_whitney(domain, bbox=(x - pad, x + pad), min_len=min_len)
    ids = _ball_cube_ids(W, x, r)
    sups = []
    for m in (4, 8):
        best = 0.0
        for q in ids:
            lo = W.lo[int(q)]
            hh = float(W.side[int(q)]) / m
            ax = np.arange(m)
            idx = np.stack(np.meshgrid(*([ax] * W.dim), indexing="ij"),
                           axis=-1).reshape(-1, W.dim)
            P = lo[None, :] + (idx + 0.5) * hh
            inside = np.sqrt(((P - x[None]) ** 2).sum(axis=1)) <= r
            if not inside.any():
                continue
            P = P[inside]
            vals = fn(P, np.asarray(domain.boundary_distance(P), dtype=float))
            best = max(best, float(vals.max()))
        sups.append(best)
    return sups[1], abs(sups[1] - sups[0])


# ---------------------------------------------------------------------------
# reverse Holder ratio


def _ball_xr(ball):
    if isinstance(ball, dict):
        x = np.asarray(ball["center"], dtype=float)
        for key in ("radius", "r"):
            if key in ball:
                return x, float(ball[key])
        raise ConfigError("surface ball dict needs a radius entry")
    x, r = ball
    return np.asarray(x, dtype=float), float(r)


def reverse_holder(grid: DyadicGrid, density, q: float, ball, pole=None):
    """Discrete reverse Holder ratio of a boundary density on a ball.

    lhs sums (omega(Q)/sigma(Q))^q sigma(Q) over the fine cubes whose
    centers fall in the doubled ball; rhs is sigma(ball)^(1-q).  The
    density must come with the interior pole it was computed from, and
    that pole has to sit inside the ball.
    """
    if q < 1.0:
        raise ConfigError("exponent must be at least 1")
    x, r = _ball_xr(ball)
    if pole is None:
        raise PoleMissing("the density's interior pole is required")
    pole = np.asarray(pole, dtype=float)
    dom = grid.domain
    inside = bool(dom.contains(pole[None])[0])
    if not inside or np.linalg.norm(pole - x) >= r:
        raise PoleMissing("pole must lie in the ball and inside the domain")

    if isinstance(density, DiscreteMeasure):
        if density.grid is not grid:
            raise ConfigError("density lives on a different grid")
        w = density.leaf_masses
    else:
        w = np.asarray(density, dtype=float)
        if w.shape != (len(grid.leaves),):
            raise ConfigError("density vector length does not match the leaves")

    centers = grid.center[grid.leaves]
    sig = grid.sigma_vector()[grid.leaves]
    d_cen = np.sqrt(((centers - x[None]) ** 2).sum(axis=1))
    in2 = d_cen <= 2.0 * r
    in1 = d_cen <= r
    if not in1.any():
        raise ConfigError("ball contains no boundary cubes")
    lhs = float(((w[in2] / sig[in2]) ** q * sig[in2]).sum())
    sig_ball = float(sig[in1].sum())
    rhs = float(sig_ball ** (1.0 - q))
    return lhs, rhs, lhs / rhs


# ---------------------------------------------------------------------------
# window sweeps


def sweep_windows(grid: DyadicGrid, gens, factors=(1.0, 2.0), stride: int = 1):
    """Deterministic (center, radius) windows: cube centers at the listed
    generations crossed with dyadic multiples of the cube length."""
    out = []
    for g in gens:
        cubes = grid.cubes_at(int(g))[::max(1, int(stride))]
        for qb in cubes:
            for f in factors:
                out.append((grid.center[int(qb)].copy(),
                            float(f) * grid.ell(int(qb))))
    if not out:
        raise ConfigError("window sweep is empty")
    return out
