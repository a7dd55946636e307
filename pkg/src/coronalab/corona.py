"""Stopping-time corona decompositions of dyadic boundary grids.

A corona decomposition partitions the cube tree below a top cube into
"regimes" (semi-coherent subtrees where a chosen density stays within
two-sided bounds) plus a bad set, with the regime tops satisfying a
Carleson packing condition.  This module builds them by two stopping
rules, restructures semi-coherent regimes into coherent pieces, verifies
the comparability conditions a decomposition is supposed to deliver,
and applies the associated measure projection.

Density oracles are pluggable.  Exact kernel oracles give assertion-grade
runs on model domains; Monte Carlo oracles participate through CI-aware
thresholds (a cube only stops when its confidence interval clears the
threshold, and ambiguous cubes are logged, not silently decided).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .carleson import DiscreteCarlesonMeasure, packing_norm
from .dyadic import DiscreteMeasure, DyadicGrid
from .errors import (
    ConfigError,
    DepthInsufficient,
    FamilyNotDisjoint,
    GeometryViolated,
    HypothesisViolated,
    NonTermination,
    NotSemiCoherent,
    OracleFailure,
    PreconditionViolated,
)
from .geometry import corkscrew_point

DEFAULT_N = 6
DEFAULT_N_TAU = 3


# ---------------------------------------------------------------------------
# data types


@dataclass
class Regime:
    """One corona regime: a semi-coherent cube set with its top and pole."""

    cubes: np.ndarray
    top: int
    q_s: int
    x_s: np.ndarray
    coherent: bool = False
    truncated: bool = False

    def __post_init__(self):
        self.cubes = np.asarray(sorted(int(c) for c in np.asarray(self.cubes).ravel()),
                                dtype=np.int64)
        if len(self.cubes) == 0:
            raise ConfigError("a regime cannot be empty")
        self.top = int(self.top)
        self.q_s = int(self.q_s)
        self.x_s = np.asarray(self.x_s, dtype=float)

    def member_set(self):
        return set(int(c) for c in self.cubes)

    def as_dict(self):
        return {
            "top": self.top,
            "q_s": self.q_s,
            "x_s": [float(v) for v in self.x_s],
            "cubes": [int(c) for c in self.cubes],
            "coherent": bool(self.coherent),
            "truncated": bool(self.truncated),
        }


def check_regime(grid: DyadicGrid, regime: Regime):
    """Structural invariants: unique maximal element and Q_S above it."""
    members = regime.member_set()
    if regime.top not in members:
        raise ConfigError("regime top must be a member")
    for q in members:
        if not grid.is_ancestor(regime.top, q):
            raise ConfigError("regime has a member outside its top's subtree")
    if not grid.is_ancestor(regime.q_s, regime.top):
        raise ConfigError("Q_S must contain the regime top")


def is_semi_coherent(grid: DyadicGrid, regime: Regime) -> bool:
    """Every member's ancestor chain up to the top stays in the regime."""
    members = regime.member_set()
    for q in members:
        i = int(grid.parent[q])
        while q != regime.top and i >= 0:
            if i not in members:
                return False
            if i == regime.top:
                break
            q, i = i, int(grid.parent[i])
    return True


def is_coherent(grid: DyadicGrid, regime: Regime) -> bool:
    """Semi-coherent and each member's children are all-in or all-out."""
    if not is_semi_coherent(grid, regime):
        return False
    members = regime.member_set()
    for q in members:
        kids = grid.children[q]
        if not kids:
            continue
        hits = sum(1 for c in kids if int(c) in members)
        if hits not in (0, len(kids)):
            return False
    return True


@dataclass
class StoppingOutcome:
    """Result of one stopping-time descent below a cube."""

    q: int
    pole: np.ndarray
    f_plus: list
    f_minus: list
    tree: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def stopped(self):
        return sorted(self.f_plus + self.f_minus)

    def __post_init__(self):
        if set(self.f_plus) & set(self.f_minus):
            raise ConfigError("stopped families must be disjoint")


@dataclass
class CoronaDecomposition:
    """Partition of a subtree into regimes plus a bad cube set."""

    grid: DyadicGrid
    q0: int
    bad: list
    regimes: list
    packing: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        seen = {}
        for k, reg in enumerate(self.regimes):
            for c in reg.cubes:
                c = int(c)
                if c in seen:
                    raise ConfigError("regimes overlap")
                seen[c] = k
        for c in self.bad:
            c = int(c)
            if c in seen:
                raise ConfigError("bad set meets a regime")
            seen[c] = -1
        expect = set(int(v) for v in self.grid.descendants(self.q0))
        if set(seen) != expect:
            raise ConfigError("regimes and bad set do not partition the subtree")

    def tops(self):
        return [reg.top for reg in self.regimes]

    def as_dict(self):
        return {
            "bad": [int(b) for b in self.bad],
            "regimes": [r.as_dict() for r in self.regimes],
            "packing": float(self.packing),
            "provenance": {k: v for k, v in self.provenance.items()},
        }


@dataclass
class CoronaVerdict:
    """Measured comparability of a corona against a tolerance factor."""

    mode: str
    per_regime: list
    min_ratio: float
    max_ratio: float
    tolerance: float
    passed: bool

    def __post_init__(self):
        want = (not self.per_regime) or (
            self.max_ratio <= self.tolerance
            and self.min_ratio >= 1.0 / self.tolerance)
        if bool(self.passed) != bool(want):
            raise ConfigError("verdict flag contradicts its own ratios")


# ---------------------------------------------------------------------------
# oracle plumbing


def _call_omega(omega_oracle, grid, pole):
    """Normalize oracle output to (cube masses, cube CI half-widths)."""
    out = omega_oracle(pole)
    ci_leaf = None
    if isinstance(out, tuple):
        out, ci_leaf = out
    if isinstance(out, DiscreteMeasure):
        if out.grid is not grid:
            raise OracleFailure("oracle measure lives on a different grid")
        leaf = out.leaf_masses
    else:
        leaf = np.asarray(out, dtype=float)
        if leaf.shape != (len(grid.leaves),):
            raise OracleFailure("oracle returned a wrong-length leaf vector")
    if not np.isfinite(leaf).all() or (leaf < 0).any():
        raise OracleFailure("oracle masses must be finite and nonnegative")
    total = float(leaf.sum())
    if total <= 0 or total > 1.0 + 1e-6:
        raise OracleFailure(f"oracle total mass {total:.6f} is not in (0, 1]")
    psum = np.concatenate([[0.0], np.cumsum(leaf)])
    mass = psum[grid.leaf_hi] - psum[grid.leaf_lo]
    ci = None
    if ci_leaf is not None:
        c2 = np.concatenate([[0.0], np.cumsum(np.asarray(ci_leaf, float) ** 2)])
        ci = np.sqrt(c2[grid.leaf_hi] - c2[grid.leaf_lo])
    return mass, ci, leaf


def default_corkscrew(domain, grid, c: float = 0.25):
    """Cube id -> interior point at the cube's own scale."""
    def provider(q):
        q = int(q)
        return np.asarray(
            corkscrew_point(domain, grid.center[q], grid.ell(q), c=c).point,
            dtype=float)
    return provider


def _pole_cube(grid, q, n_tau):
    """The n_tau-generations-down cube containing the center sample of q."""
    lo, hi = int(grid.sample_lo[q]), int(grid.sample_hi[q])
    j = lo + int(np.argmin(((grid.points[lo:hi] - grid.center[q][None]) ** 2).sum(axis=1)))
    cur = int(q)
    for _ in range(int(n_tau)):
        nxt = None
        for c in grid.children[cur]:
            if grid.sample_lo[c] <= j < grid.sample_hi[c]:
                nxt = int(c)
                break
        if nxt is None:
            raise DepthInsufficient("ran out of children while descending to the pole cube")
        cur = nxt
    return cur


def _subtree_sqrt_maximal(grid, q, mass):
    """Prefix sums of sqrt(max ratio along the chain from q) over leaf ranks.

    maxr[i] is the running maximum of mass/sigma over the chain q..i, so the
    leaf value is the dyadic maximal function of the (normalized) measure
    restricted to this subtree; the prefix array turns every cube average
    into two lookups.
    """
    end = int(grid.subtree_end[q])
    sig = grid.sigma_vector()
    maxr = np.empty(grid.n_cubes)
    maxr[q] = mass[q] / sig[q]
    for i in range(q + 1, end):
        maxr[i] = max(maxr[int(grid.parent[i])], mass[i] / sig[i])
    n_leaf = len(grid.leaves)
    contrib = np.zeros(n_leaf)
    r0, r1 = int(grid.leaf_lo[q]), int(grid.leaf_hi[q])
    leaf_ids = grid.leaves[r0:r1]
    leaf_sig = sig[leaf_ids]
    contrib[r0:r1] = np.sqrt(maxr[leaf_ids]) * leaf_sig
    return np.concatenate([[0.0], np.cumsum(contrib)])


# ---------------------------------------------------------------------------
# stopping rules


def stopping_time_basic(grid: DyadicGrid, q: int, omega_oracle,
                        N: int = DEFAULT_N, N_tau: int = DEFAULT_N_TAU,
                        corkscrew=None) -> StoppingOutcome:
    """Descend below q, stopping where the density leaves its dyadic band.

    The pole sits at the corkscrew point of the N_tau-generations-down
    cube containing q's center, and the oracle's measure is normalized by
    sigma(q).  A cube stops low when its density ratio drops below 2^-N
    (-> f_minus) and stops high when the square of the averaged root of
    the chain-maximal function exceeds 2^(2N) without the low condition
    (-> f_plus).  Every cube kept in the tree is re-checked against both
    two-sided bounds; a violation is an oracle failure, not a tolerance.
    """
    q = int(q)
    if N < 2:
        raise PreconditionViolated("band exponent N must be at least 2")
    if grid.depth - int(grid.gen[q]) < N_tau + 2:
        raise DepthInsufficient(
            f"need {N_tau + 2} generations below the cube, have "
            f"{grid.depth - int(grid.gen[q])}")
    if corkscrew is None:
        corkscrew = default_corkscrew(grid.domain, grid)
    pole = np.asarray(corkscrew(_pole_cube(grid, q, N_tau)), dtype=float)

    raw_mass, raw_ci, _ = _call_omega(omega_oracle, grid, pole)
    sig = grid.sigma_vector()
    scale = float(sig[q])
    mass = scale * raw_mass
    ci = None if raw_ci is None else scale * raw_ci
    psqrt = _subtree_sqrt_maximal(grid, q, mass)

    lo_thr = 2.0 ** (-N)
    hi_thr = 2.0 ** (2 * N)

    def avg_sq(i):
        a = (psqrt[grid.leaf_hi[i]] - psqrt[grid.leaf_lo[i]]) / sig[i]
        return a * a

    f_minus, f_plus, tree, ambiguous = [], [], [q], []
    stack = [int(c) for c in grid.children[q]]
    while stack:
        i = stack.pop()
        ratio = mass[i] / sig[i]
        if ci is not None:
            w = ci[i] / sig[i]
            if ratio + w < lo_thr:
                f_minus.append(i)
                continue
            if ratio - w < lo_thr:
                ambiguous.append(i)  # CI straddles the low threshold: keep
        elif ratio < lo_thr:
            f_minus.append(i)
            continue
        if avg_sq(i) > hi_thr:
            f_plus.append(i)
            continue
        tree.append(i)
        stack.extend(int(c) for c in grid.children[i])

    for i in tree:
        ratio = mass[i] / sig[i]
        slack = 0.0 if ci is None else ci[i] / sig[i]
        if ratio + slack < lo_thr or avg_sq(i) > hi_thr:
            raise OracleFailure(
                f"kept cube {i} violates the two-sided band; the oracle's "
                "masses are inconsistent with the descent")

    stopped_sig = float(sig[f_plus].sum() + sig[f_minus].sum()) if (f_plus or f_minus) else 0.0
    meta = {
        "N": int(N), "N_tau": int(N_tau),
        "omega_at_q": float(raw_mass[q]),
        "fplus_sigma": float(sig[f_plus].sum()) if f_plus else 0.0,
        "fminus_sigma": float(sig[f_minus].sum()) if f_minus else 0.0,
        "fplus_sigma_ratio": (float(sig[f_plus].sum()) / (lo_thr * scale)
                              if f_plus else 0.0),
        "stopped_sigma": stopped_sig,
        "ambiguous": ambiguous,
    }
    return StoppingOutcome(q=q, pole=pole, f_plus=sorted(f_plus),
                           f_minus=sorted(f_minus),
                           tree=_prune_tree(grid, q, f_plus + f_minus),
                           meta=meta)


def _prune_tree(grid, q, stopped):
    """Subtree of q minus the full subtrees of the stopped cubes."""
    keep = np.ones(int(grid.subtree_end[q]) - q, dtype=bool)
    for s in stopped:
        keep[int(s) - q:int(grid.subtree_end[s]) - q] = False
    return np.arange(q, int(grid.subtree_end[q]))[keep]


def ainfty_stopping(grid: DyadicGrid, q: int, mu: DiscreteMeasure,
                    beta: float, eta: float, K1: float):
    """Stop where mu/sigma exits [beta/2, K1/eta]; returns (F_Q, alpha, K2).

    alpha is the stopped sigma fraction of q (the ampleness deficit) and
    K2 the measured density bound over the kept cubes.
    """
    out = _ainfty_outcome(grid, int(q), mu, beta, eta, K1, scale=1.0)
    return out.stopped, out.meta["alpha"], out.meta["K2_measured"]


def _ainfty_outcome(grid, q, mu, beta, eta, K1, scale=1.0, restricted=False):
    if not (0.0 < beta < 1.0 and 0.0 < eta < 1.0):
        raise PreconditionViolated("beta and eta must lie in (0, 1)")
    if K1 < 1.0:
        raise PreconditionViolated("K1 must be at least 1")
    if mu.grid is not grid:
        raise ConfigError("measure lives on a different grid")
    sig = grid.sigma_vector()
    mass = scale * mu.cube_masses()
    r_top = mass[q] / sig[q]
    # a restricted call sees only the subtree's mass as its world total
    r_all = r_top if restricted else scale * mu.total / sig[q]
    if not (1.0 - 1e-9 <= r_top <= r_all + 1e-9 and r_all <= K1 * (1 + 1e-9)):
        raise HypothesisViolated(
            f"need 1 <= mu(Q)/sigma(Q) <= mu(total)/sigma(Q) <= K1, got "
            f"{r_top:.4f} and {r_all:.4f} vs K1={K1}")
    lo_thr = beta / 2.0
    hi_thr = K1 / eta

    f_minus, f_plus, tree = [], [], [q]
    stack = [int(c) for c in grid.children[q]]
    while stack:
        i = stack.pop()
        ratio = mass[i] / sig[i]
        if ratio < lo_thr:
            f_minus.append(i)
            continue
        if ratio > hi_thr:
            f_plus.append(i)
            continue
        tree.append(i)
        stack.extend(int(c) for c in grid.children[i])

    kept_ratios = mass[tree] / sig[tree]
    if (kept_ratios < lo_thr - 1e-12).any():
        raise OracleFailure("a kept cube dips under beta/2; descent inconsistent")
    stopped = f_plus + f_minus
    alpha = float(sig[stopped].sum() / sig[q]) if stopped else 0.0
    meta = {
        "beta": float(beta), "eta": float(eta), "K1": float(K1),
        "K2_threshold": float(hi_thr),
        "K2_measured": float(kept_ratios.max()),
        "alpha": alpha,
        "stopped_sigma": float(sig[stopped].sum()) if stopped else 0.0,
    }
    return StoppingOutcome(q=int(q), pole=np.full(grid.points.shape[1], np.nan),
                           f_plus=sorted(f_plus), f_minus=sorted(f_minus),
                           tree=_prune_tree(grid, int(q), stopped), meta=meta)


# ---------------------------------------------------------------------------
# iteration


def iterate_corona(grid: DyadicGrid, q0: int, rule: str, params=None,
                   omega_oracle=None, mu=None, corkscrew=None,
                   depth_floor=None, max_rounds=None,
                   bourgain_floor=1.0 / 16) -> CoronaDecomposition:
    """Recursively apply a stopping rule below q0 and collect the regimes.

    rule "basic" takes params (N, N_tau) plus an omega oracle; rule
    "ainfty" takes params (beta, eta, K1) plus a measure, which is
    restricted and renormalized on each stopped subtree so the lemma
    hypothesis holds again.  Stopped cubes too close to the grid floor
    become whole-subtree regimes flagged truncated; packing constants
    with and without those tops are both reported.
    """
    q0 = int(q0)
    params = dict(params or {})
    if rule not in ("basic", "ainfty"):
        raise ConfigError(f"unknown stopping rule {rule!r}")
    if rule == "basic":
        if omega_oracle is None:
            raise ConfigError("basic rule needs an omega oracle")
        N = int(params.get("N", DEFAULT_N))
        N_tau = int(params.get("N_tau", DEFAULT_N_TAU))
        need = N_tau + 2
    else:
        if mu is None:
            raise ConfigError("ainfty rule needs a measure")
        beta = float(params.get("beta", 0.5))
        eta = float(params.get("eta", 0.5))
        K1 = float(params.get("K1", max(1.0, mu.total / grid.cube_sigma(q0))))
        need = 1
    if corkscrew is None:
        corkscrew = default_corkscrew(grid.domain, grid)
    if depth_floor is None:
        depth_floor = grid.depth - need
    if max_rounds is None:
        max_rounds = 4 * grid.n_cubes

    sig = grid.sigma_vector()
    regimes = []
    floor_cubes = []
    levels = {}
    work = [(q0, 0, 1.0)]
    rounds = 0
    while work:
        rounds += 1
        if rounds > max_rounds:
            raise NonTermination(f"stopping iteration exceeded {max_rounds} rounds")
        q, level, scale = work.pop(0)
        if int(grid.gen[q]) > depth_floor:
            floor_cubes.append(q)
            regimes.append(Regime(cubes=grid.descendants(q), top=q, q_s=q,
                                  x_s=corkscrew(q), truncated=True))
            continue
        if rule == "basic":
            out = stopping_time_basic(grid, q, omega_oracle, N=N, N_tau=N_tau,
                                      corkscrew=corkscrew)
            if bourgain_floor is not None and out.meta["omega_at_q"] < bourgain_floor:
                raise OracleFailure(
                    f"pole sees only {out.meta['omega_at_q']:.4f} of its cube, "
                    f"below the required {bourgain_floor:.4f}")
            pole = out.pole
            next_scale = [1.0] * len(out.stopped)
        else:
            if scale is None:
                floor_cubes.append(q)
                regimes.append(Regime(cubes=grid.descendants(q), top=q, q_s=q,
                                      x_s=corkscrew(q), truncated=True))
                continue
            out = _ainfty_outcome(grid, q, mu, beta, eta, K1, scale=scale,
                                  restricted=(level > 0))
            pole = corkscrew(q)
            masses = scale * mu.cube_masses()
            # renormalize each stopped subtree so its own top ratio is 1
            next_scale = [
                (scale * sig[s] / masses[s]) if masses[s] > 0 else None
                for s in out.stopped
            ]
        regimes.append(Regime(cubes=out.tree, top=q, q_s=q, x_s=pole))
        lv = levels.setdefault(level, {"n_stopped": 0, "sigma_stopped": 0.0,
                                       "sigma_tops": 0.0})
        lv["n_stopped"] += len(out.stopped)
        lv["sigma_stopped"] += out.meta.get("stopped_sigma", 0.0)
        lv["sigma_tops"] += float(sig[q])
        for s, sc in zip(out.stopped, next_scale):
            work.append((int(s), level + 1, sc))

    tops_all = [r.top for r in regimes]
    tops_full = [r.top for r in regimes if not r.truncated]
    roots = grid.descendants(q0)
    m_all = DiscreteCarlesonMeasure.from_cubes(grid, tops_all)
    pack_all = packing_norm(grid, m_all, roots=roots)
    pack_full = pack_all
    if len(tops_full) != len(tops_all):
        if tops_full:
            m_full = DiscreteCarlesonMeasure.from_cubes(grid, tops_full)
            pack_full = packing_norm(grid, m_full, roots=roots)
        else:
            pack_full = 0.0
    prov = {
        "rule": rule, "params": params, "depth_floor": int(depth_floor),
        "floor_cubes": [int(c) for c in floor_cubes],
        "packing_all": float(pack_all),
        "packing_untruncated": float(pack_full),
        "levels": [dict(round=k, **levels[k]) for k in sorted(levels)],
    }
    return CoronaDecomposition(grid=grid, q0=q0, bad=[], regimes=regimes,
                               packing=float(pack_all), provenance=prov)


# ---------------------------------------------------------------------------
# coherent restructuring


def _coherent_pieces(grid, regime):
    members = regime.member_set()
    new_tops = set()
    for m in members:
        if m == regime.top:
            new_tops.add(m)
            continue
        p = int(grid.parent[m])
        if p not in members:
            new_tops.add(m)
            continue
        if any(int(s) not in members for s in grid.children[p]):
            new_tops.add(m)
    assign = {}
    for m in members:
        cur = m
        while cur not in new_tops:
            cur = int(grid.parent[cur])
        assign.setdefault(cur, []).append(m)
    return [Regime(cubes=np.asarray(sorted(assign[t]), dtype=np.int64), top=t,
                   q_s=regime.q_s, x_s=regime.x_s, coherent=True,
                   truncated=regime.truncated)
            for t in sorted(assign)]


def coherentize(corona: CoronaDecomposition) -> CoronaDecomposition:
    """Split every regime into maximal coherent pieces.

    A member opens a new piece iff its parent left the regime or one of
    its siblings did; (Q_S, X_S) are inherited from the source regime.
    """
    grid = corona.grid
    out = []
    for reg in corona.regimes:
        if not is_semi_coherent(grid, reg):
            raise NotSemiCoherent(f"regime with top {reg.top} is not semi-coherent")
        pieces = _coherent_pieces(grid, reg)
        for p in pieces:
            if not is_coherent(grid, p):
                raise ConfigError("internal error: piece failed the coherency check")
        out.extend(pieces)
    tops = [r.top for r in out] + [int(b) for b in corona.bad]
    pack = packing_norm(grid, DiscreteCarlesonMeasure.from_cubes(grid, sorted(set(tops))),
                        roots=grid.descendants(corona.q0)) if tops else 0.0
    prov = dict(corona.provenance)
    prov["coherentized"] = True
    prov["pieces_from"] = len(corona.regimes)
    return CoronaDecomposition(grid=grid, q0=corona.q0, bad=list(corona.bad),
                               regimes=out, packing=float(pack), provenance=prov)


# ---------------------------------------------------------------------------
# verification


def _leaf_ball_sums(grid, leaf_masses, center, radius):
    """(mass, sigma) of the leaves whose centers fall in the ball."""
    centers = grid.center[grid.leaves]
    inside = ((centers - np.asarray(center)[None]) ** 2).sum(axis=1) <= radius * radius
    sig = grid.sigma_vector()[grid.leaves]
    return float(leaf_masses[inside].sum()), float(sig[inside].sum())


def _green_values(green_oracle, x_s, pts):
    """Batched oracle call when supported, per-point fallback otherwise."""
    try:
        gv = np.asarray(green_oracle(x_s, pts), dtype=float)
        if gv.shape == (len(pts),):
            return gv
    except Exception:
        pass
    return np.array([float(green_oracle(x_s, p)) for p in pts])


def _green_net(domain, x, radius, pitch):
    span = np.arange(-math.floor(radius / pitch), math.floor(radius / pitch) + 1) * pitch
    grids = np.meshgrid(*([span] * domain.dim), indexing="ij")
    pts = np.asarray(x)[None, :] + np.stack([g.ravel() for g in grids], axis=1)
    keep = (pts - np.asarray(x)[None]) ** 2
    pts = pts[keep.sum(axis=1) <= radius * radius]
    pts = pts[domain.contains(pts)]
    return pts


def verify_corona(corona: CoronaDecomposition, omega_oracle=None,
                  green_oracle=None, maximal_op=None, mode: str = "average",
                  c: float = 0.25, tolerance: float = 32.0) -> CoronaVerdict:
    """Measure the comparability a corona decomposition promises.

    average and strong assume the near-pole normalization (the pole sees
    mass about 1 on Q_S), so their ratios are absolute: average takes
    the density of the pole's measure on each member's doubled surface
    ball times sigma(Q_S); strong takes the squared average of the root
    of the chain-maximal function of sigma(Q_S)-scaled measure; both
    fold in the pole's own mass at Q_S, so a displaced pole shows up as
    a small ratio.  green compares sup of G(X_S, .)/dist over a net in
    the doubled space ball with clearance >= c*l(Q) against the pole's
    density at Q_S, and first enforces the far-pole constraint
    dist(X_S) >= 4*Xi*l(Q_S).
    """
    if mode not in ("strong", "average", "green"):
        raise ConfigError(f"unknown verification mode {mode!r}")
    if tolerance < 1.0:
        raise ConfigError("tolerance factor must be >= 1")
    grid = corona.grid
    dom = grid.domain
    if mode in ("strong", "average") and omega_oracle is None:
        raise ConfigError(f"{mode} mode needs an omega oracle")
    if mode == "green" and (green_oracle is None or omega_oracle is None):
        raise ConfigError("green mode needs both oracles")

    if mode == "green":
        for reg in corona.regimes:
            dx = float(dom.boundary_distance(reg.x_s[None])[0])
            need = 4.0 * grid.Xi * grid.ell(reg.q_s)
            if dx < need * (1 - 1e-9):
                raise GeometryViolated(
                    f"pole clearance {dx:.4f} under the required "
                    f"{need:.4f} for regime top {reg.top}")

    sig = grid.sigma_vector()
    per_regime = []
    lo = math.inf
    hi = -math.inf
    for reg in corona.regimes:
        mass, _, leaf = _call_omega(omega_oracle, grid, reg.x_s)
        if mode == "average":
            vals = []
            for qb in reg.cubes:
                b = grid.balls(int(qb))
                m, s = _leaf_ball_sums(grid, leaf, b["center"], 2.0 * b["R_outer"])
                vals.append(m / s * sig[reg.q_s] if s > 0 else 0.0)
            vals.append(float(mass[reg.q_s]))  # the pole's mass on Q_S itself
            base = 1.0
        elif mode == "strong":
            scaled = sig[reg.q_s] * mass
            if maximal_op is not None:
                psqrt = maximal_op(grid, reg.top, scaled)
            else:
                psqrt = _subtree_sqrt_maximal(grid, reg.top, scaled)
            vals = []
            for qb in reg.cubes:
                a = (psqrt[grid.leaf_hi[qb]] - psqrt[grid.leaf_lo[qb]]) / sig[qb]
                vals.append(a * a)
            vals.append(float(mass[reg.q_s]))
            base = 1.0
        else:
            base = mass[reg.q_s] / sig[reg.q_s]
            vals = []
            for qb in reg.cubes:
                qb = int(qb)
                b = grid.balls(qb)
                ell = grid.ell(qb)
                pitch = c * ell / 8.0
                sup = 0.0
                for p in (pitch, pitch / 2.0):
                    pts = _green_net(dom, b["center"], 2.0 * b["R_outer"], p)
                    if len(pts) == 0:
                        continue
                    deltas = np.asarray(dom.boundary_distance(pts), dtype=float)
                    pts = pts[deltas >= c * ell]
                    deltas = deltas[deltas >= c * ell]
                    if len(pts) == 0:
                        continue
                    gv = _green_values(green_oracle, reg.x_s, pts)
                    sup = max(sup, float((gv / deltas).max()))
                vals.append(sup)
        if base <= 0:
            raise GeometryViolated(
                f"regime top {reg.top} carries no reference mass for mode {mode}")
        ratios = np.asarray(vals) / base
        worst = float(np.max(np.maximum(ratios, 1.0 / np.maximum(ratios, 1e-300))))
        per_regime.append({
            "top": int(reg.top), "q_s": int(reg.q_s), "n_cubes": int(len(reg.cubes)),
            "min_ratio": float(ratios.min()), "max_ratio": float(ratios.max()),
            "worst": worst,
        })
        lo = min(lo, float(ratios.min()))
        hi = max(hi, float(ratios.max()))

    if not per_regime:
        return CoronaVerdict(mode=mode, per_regime=[], min_ratio=1.0,
                             max_ratio=1.0, tolerance=float(tolerance), passed=True)
    passed = hi <= tolerance and lo >= 1.0 / tolerance
    return CoronaVerdict(mode=mode, per_regime=per_regime, min_ratio=float(lo),
                         max_ratio=float(hi), tolerance=float(tolerance),
                         passed=bool(passed))


# ---------------------------------------------------------------------------
# measure projection


def project_measure(grid: DyadicGrid, F, mu: DiscreteMeasure, A) -> float:
    """P_F mu(A): mu outside the family plus sigma-uniform fill inside it.

    F must be pairwise disjoint cubes; A is any union of grid cubes.
    Exact on the grid: every term reduces to leaf-mask sums.
    """
    if mu.grid is not grid:
        raise ConfigError("measure lives on a different grid")
    F = sorted(int(f) for f in F)
    for a, b in zip(F, F[1:]):
        if b < int(grid.subtree_end[a]):
            raise FamilyNotDisjoint(f"cubes {a} and {b} overlap")
    n_leaf = len(grid.leaves)
    in_A = np.zeros(n_leaf, dtype=bool)
    for qa in A:
        in_A[int(grid.leaf_lo[qa]):int(grid.leaf_hi[qa])] = True
    in_F = np.zeros(n_leaf, dtype=bool)
    sig_leaf = grid.sigma_vector()[grid.leaves]
    out = 0.0
    for qf in F:
        r0, r1 = int(grid.leaf_lo[qf]), int(grid.leaf_hi[qf])
        in_F[r0:r1] = True
        s_int = float(sig_leaf[r0:r1][in_A[r0:r1]].sum())
        if s_int > 0:
            out += s_int / grid.cube_sigma(qf) * float(mu.leaf_masses[r0:r1].sum())
    out += float(mu.leaf_masses[in_A & ~in_F].sum())
    return out
