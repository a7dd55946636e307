"""End-to-end acceptance gate: one check per shipped guarantee.

Each test is a single pass/fail line under pytest -v.  Oracles are
analytic (Poisson kernel quadrature, image charges, separable series) or
exhaustive scans; stochastic estimates carry their own confidence bounds.
"""

import json
import time

import numpy as np
import pytest

from coronalab.carleson import (
    CoefficientField,
    coefficient_carleson,
    full_cme,
    packing_norm,
    packing_ratios,
)
from coronalab.cli import main
from coronalab.corona import (
    Regime,
    coherentize,
    is_coherent,
    iterate_corona,
    stopping_time_basic,
    verify_corona,
)
from coronalab.dyadic import (
    DiscreteMeasure,
    build_grid,
    dyadic_maximal,
    verify_grid,
)
from coronalab.errors import CorkscrewNotFound
from coronalab.geometry import corkscrew_point, make_domain
from coronalab.kernels import ball_green
from coronalab.pde import (
    CapTargets,
    ComponentTargets,
    CubeTargets,
    boundary_solution,
    exact_harmonic_measure,
    green_value,
    harmonic_measure,
)
from coronalab.whitney import build_whitney, verify_whitney

DISK_SPEC = {"shape": "ball", "d": 2, "center": [0.0, 0.0], "radius": 1.0}


@pytest.fixture(scope="module")
def disk():
    return make_domain(DISK_SPEC)


@pytest.fixture(scope="module")
def ball3():
    return make_domain({"shape": "ball", "d": 3, "center": [0, 0, 0],
                        "radius": 1.0})


@pytest.fixture(scope="module")
def four_corner():
    return make_domain({"shape": "four_corner", "d": 2, "stages": 4})


# ---------------------------------------------------------------------------
# 1-2: harmonic measure vs the Poisson kernel


def _cap_mass_quadrature(pole, axis, alpha, n_t=400, n_p=800):
    """Midpoint quadrature of (1-|X|^2)/(4 pi |X-y|^3) over a spherical cap."""
    t = (np.arange(n_t) + 0.5) / n_t * alpha
    p = (np.arange(n_p) + 0.5) / n_p * 2 * np.pi
    a = axis / np.linalg.norm(axis)
    b = np.array([1.0, 0, 0]) if abs(a[0]) < 0.9 else np.array([0, 1.0, 0])
    e1 = np.cross(a, b)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    T, P = np.meshgrid(t, p, indexing="ij")
    Y = (np.cos(T)[..., None] * a + np.sin(T)[..., None]
         * (np.cos(P)[..., None] * e1 + np.sin(P)[..., None] * e2))
    dist3 = np.linalg.norm(Y - pole, axis=-1) ** 3
    ker = (1.0 - pole @ pole) / (4 * np.pi * dist3)
    dA = np.sin(T) * (alpha / n_t) * (2 * np.pi / n_p)
    return float((ker * dA).sum())


def test_01_wos_matches_poisson_kernel_ball3(ball3):
    rng = np.random.default_rng(101)
    t0 = time.time()
    for i in range(20):
        pole = rng.uniform(-0.5, 0.5, 3)
        while np.linalg.norm(pole) > 0.5:
            pole = rng.uniform(-0.5, 0.5, 3)
        axis = rng.normal(size=3)
        alpha = rng.uniform(0.3, 1.2)
        oracle = _cap_mass_quadrature(pole, axis, alpha)
        est = harmonic_measure(ball3, pole, CapTargets(ball3, [(axis, alpha)]),
                               paths=100_000, seed=100 + i)
        gap = abs(float(est.mass[0]) - oracle)
        allow = max(3.0 * float(est.ci[0]), 0.01)
        assert gap <= allow, f"pair {i}: gap {gap:.4f} > {allow:.4f}"
    assert time.time() - t0 < 60.0


def test_02_center_pole_half_circle_is_half(disk):
    est = harmonic_measure(disk, [0.0, 0.0],
                           CapTargets(disk, [(np.array([1.0, 0.0]), np.pi / 2)]),
                           paths=4000, seed=11)
    assert abs(float(est.mass[0]) - 0.5) <= 3.0 * float(est.ci[0])


# ---------------------------------------------------------------------------
# 3: Green values vs the image charge


def test_03_green_image_charge_and_symmetry(ball3):
    rng = np.random.default_rng(303)
    center = np.zeros(3)
    for i in range(20):
        x = rng.uniform(-0.6, 0.6, 3)
        y = rng.uniform(-0.6, 0.6, 3)
        while (np.linalg.norm(x) > 0.6 or np.linalg.norm(y) > 0.6
               or np.linalg.norm(x - y) < 0.15):
            x = rng.uniform(-0.6, 0.6, 3)
            y = rng.uniform(-0.6, 0.6, 3)
        exact = float(ball_green(center, 1.0, x, y))
        fwd = green_value(ball3, x, y, paths=30_000, seed=300 + i)
        bwd = green_value(ball3, y, x, paths=30_000, seed=600 + i)
        err = abs(fwd.value - exact)
        assert err <= max(0.05 * exact, 3.0 * fwd.ci), f"pair {i}: {err:.2e}"
        gap = abs(fwd.value - bwd.value)
        assert gap <= 3.0 * (fwd.ci + bwd.ci), f"pair {i}: asym {gap:.2e}"


# ---------------------------------------------------------------------------
# 4-5: Whitney and grid invariants


def test_04_whitney_inequalities_disk_and_four_corner(disk, four_corner):
    total = 0
    for dom in (disk, four_corner):
        W = build_whitney(dom, min_len=2.0 ** -8)
        rep = verify_whitney(W)
        total += len(W)
        assert rep.frac_4_40 == 1.0, f"{dom.meta['shape']}: 4/40 violated"
        assert rep.neighbor_ratio_ok and rep.disjoint and rep.ok
    assert total >= 10_000


def test_05_grid_invariants_circle_and_four_corner(disk, four_corner):
    taus = [2.0 ** -k for k in range(1, 7)]
    for dom, depth in ((disk, 7), (four_corner, 6)):
        g = build_grid(dom, depth=depth)
        rep = verify_grid(g, taus=taus)
        assert all(rep.checks.values()), f"{dom.meta['shape']}: {rep.checks}"
        assert g.C1 <= 8.0
        assert rep.gamma > 0.0


# ---------------------------------------------------------------------------
# 6: stopping-time postconditions


def _band_report(grid, q0, masses, sig, N):
    """Independent two-sided recheck: density ratios and the averaged
    root of the chain-maximal function, by explicit chain walks."""
    scale = sig[q0] / masses[q0] if masses[q0] else 1.0
    leaves = grid.leaves
    chain_max = np.zeros(len(leaves))
    for j, leaf in enumerate(leaves):
        if not (q0 <= leaf < grid.subtree_end[q0]):
            chain_max[j] = np.nan
            continue
        best, i = 0.0, int(leaf)
        while True:
            best = max(best, scale * masses[i] / sig[i])
            if i == q0:
                break
            i = int(grid.parent[i])
        chain_max[j] = best
    lo, hi = [], []
    for i in range(q0, int(grid.subtree_end[q0])):
        lo.append(scale * masses[i] / sig[i])
        sel = slice(grid.leaf_lo[i], grid.leaf_hi[i])
        w = np.array([sig[l] for l in leaves[sel]])
        avg = float((np.sqrt(chain_max[sel]) * w).sum() / sig[i])
        hi.append(avg * avg)
    return np.array(lo), np.array(hi)


def test_06_stopping_band_exact_and_monte_carlo(disk):
    N = 6
    g = build_grid(disk, depth=6)
    sig = np.array([g.cube_sigma(i) for i in range(g.n_cubes)])

    # exact oracle: every kept cube must sit inside the band, no slack
    out = stopping_time_basic(g, 0, lambda p: exact_harmonic_measure(disk, g, p),
                              N=N)
    mu = exact_harmonic_measure(disk, g, out.pole)
    masses = np.array([mu.cube_mass(i) for i in range(g.n_cubes)])
    lo, hi = _band_report(g, 0, masses, sig, N)
    stopped = set(out.f_plus) | set(out.f_minus)
    kept = [i for i in out.tree if i not in stopped]
    for i in kept:
        assert lo[i] >= 2.0 ** -N, f"cube {i} under the low threshold"
        assert hi[i] <= 2.0 ** (2 * N), f"cube {i} over the high threshold"
    C = out.meta["fplus_sigma_ratio"]
    assert out.meta["fplus_sigma"] <= 2.0 ** -N * sig[0] * max(C, 1e-30)
    assert C <= 4.0

    # Monte Carlo oracle: same band, widened by the reported confidence
    g5 = build_grid(disk, depth=5)
    sig5 = np.array([g5.cube_sigma(i) for i in range(g5.n_cubes)])
    targets = CubeTargets(g5, [int(q) for q in g5.leaves])

    def wos_oracle(pole):
        est = harmonic_measure(disk, pole, targets, paths=20_000, seed=606)
        return est.mass, est.ci

    out5 = stopping_time_basic(g5, 0, wos_oracle, N=N)
    mass5_leaf, ci5_leaf = wos_oracle(out5.pole)
    m5 = np.zeros(g5.n_cubes)
    c5 = np.zeros(g5.n_cubes)
    for i in range(g5.n_cubes):
        sel = slice(g5.leaf_lo[i], g5.leaf_hi[i])
        m5[i] = mass5_leaf[sel].sum()
        c5[i] = ci5_leaf[sel].sum()
    scale5 = sig5[0]
    stopped5 = set(out5.f_plus) | set(out5.f_minus)
    for i in out5.tree:
        if i in stopped5:
            continue
        ratio = scale5 * m5[i] / sig5[i]
        slack = scale5 * c5[i] / sig5[i]
        assert ratio + slack >= 2.0 ** -N
    assert out5.meta["fplus_sigma_ratio"] <= 4.0


# ---------------------------------------------------------------------------
# 7: packing stability across depths


def test_07_corona_packing_stable_across_depths(disk):
    packings = []
    for depth in (6, 8, 10):
        g = build_grid(disk, depth=depth)
        dec = iterate_corona(g, 0, "basic", params={"N": 6},
                             omega_oracle=lambda p: exact_harmonic_measure(disk, g, p))
        tops = np.zeros(g.n_cubes)
        sig = np.array([g.cube_sigma(i) for i in range(g.n_cubes)])
        for r in dec.regimes:
            tops[r.top] = sig[r.top]
        packings.append(packing_norm(g, tops))
    packings = np.array(packings)
    assert packings.max() <= 10.0
    assert (packings.max() - packings.min()) <= 0.25 * packings.min()


# ---------------------------------------------------------------------------
# 8: iterated stopping decay


def test_08_ainfty_levels_decay(disk):
    g = build_grid(disk, depth=9)
    raw = exact_harmonic_measure(disk, g, [0.75, 0.0])
    mu = DiscreteMeasure(g, g.cube_sigma(0) * raw.leaf_masses)
    dec = iterate_corona(g, 0, "ainfty",
                         params={"beta": 0.5, "eta": 0.5, "K1": 1.0}, mu=mu)
    levels = dec.provenance["levels"]
    alphas = [lv["sigma_stopped"] / lv["sigma_tops"] for lv in levels]
    assert len(alphas) >= 2
    for a in alphas:
        assert a < 1.0
    for prev, nxt in zip(alphas, alphas[1:]):
        assert nxt <= 1.1 * prev, f"level ratio grew: {prev:.3f} -> {nxt:.3f}"


# ---------------------------------------------------------------------------
# 9: corona verification, average and Green flavors


def test_09_verify_average_and_green(disk):
    g6 = build_grid(disk, depth=6)
    oracle6 = lambda p: exact_harmonic_measure(disk, g6, p)
    dec6 = iterate_corona(g6, 0, "basic", params={"N": 6}, omega_oracle=oracle6)
    va = verify_corona(dec6, omega_oracle=oracle6, mode="average",
                       tolerance=32.0)
    assert va.passed, f"average ratios [{va.min_ratio:.4f}, {va.max_ratio:.4f}]"

    # Green flavor: deep grid below a small top, pole pinned at the center
    # so the regime pole clears 4 Xi ell(Q_S)
    g11 = build_grid(disk, depth=11)
    q0 = int(g11.cubes_at(6)[0])
    oracle11 = lambda p: exact_harmonic_measure(disk, g11, p)
    dec11 = iterate_corona(g11, q0, "basic", params={"N": 8},
                           omega_oracle=oracle11,
                           corkscrew=lambda q: np.zeros(2),
                           bourgain_floor=None)

    def green_oracle(X, Z):
        X = np.asarray(X, dtype=float)
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        nx = np.linalg.norm(X)
        if nx < 1e-12:
            num = np.ones(len(Z))
        else:
            num = np.linalg.norm(X / nx - nx * Z, axis=1)
        return (np.log(num) - np.log(np.linalg.norm(X - Z, axis=1))) / (2 * np.pi)

    vg = verify_corona(dec11, omega_oracle=oracle11, green_oracle=green_oracle,
                       mode="green", c=0.25, tolerance=32.0)
    assert vg.passed, f"green ratios [{vg.min_ratio:.4f}, {vg.max_ratio:.4f}]"


# ---------------------------------------------------------------------------
# 10: four-corner energy measure


class _EdgeField:
    """Harmonic extension of the bottom-edge indicator of every square,
    by the exact separable series mapped square-by-square."""

    def __init__(self, domain):
        coll = domain.pieces[0]
        self.los, self.his = coll.los, coll.his
        self.sides = self.his[:, 0] - self.los[:, 0]

    def _locate(self, P):
        inside = ((P[:, None, :] >= self.los[None] - 1e-12)
                  & (P[:, None, :] <= self.his[None] + 1e-12))
        return np.argmax(inside.all(axis=2), axis=1)

    @staticmethod
    def _series(XY, want_grad):
        x, y = XY[:, 0], XY[:, 1]
        ymin = max(float(y.min()), 1e-9)
        n_max = int(min(4001, max(21, 2 * int(30.0 / (np.pi * ymin)) + 1)))
        n = np.arange(1, n_max + 1, 2, dtype=float)
        npi = n * np.pi
        E = np.exp(-npi[None, :] * y[:, None])
        E2 = np.exp(-2.0 * npi[None, :] * (1.0 - y)[:, None])
        den = 1.0 - np.exp(-2.0 * npi)
        S = np.sin(npi[None, :] * x[:, None])
        if not want_grad:
            return (4.0 / npi[None, :] * S * E * (1.0 - E2) / den[None, :]).sum(axis=1)
        C = np.cos(npi[None, :] * x[:, None])
        ux = (4.0 * C * E * (1.0 - E2) / den[None, :]).sum(axis=1)
        uy = (-4.0 * S * E * (1.0 + E2) / den[None, :]).sum(axis=1)
        return np.stack([ux, uy], axis=1)

    def __call__(self, P, want_grad):
        P = np.atleast_2d(np.asarray(P, dtype=float))
        k = self._locate(P)
        rel = (P - self.los[k]) / self.sides[k][:, None]
        out = np.zeros((len(P), 2)) if want_grad else np.zeros(len(P))
        for chunk in np.array_split(np.arange(len(P)), max(1, len(P) // 512)):
            if not len(chunk):
                continue
            r = self._series(rel[chunk], want_grad)
            out[chunk] = (r / self.sides[k[chunk]][:, None]) if want_grad else r
        return out


def test_10_four_corner_cme_bounded_and_linear(four_corner):
    field = _EdgeField(four_corner)
    sol = boundary_solution(four_corner, mode="exact",
                            value_fn=lambda P: field(P, False),
                            grad_fn=lambda P: field(P, True))
    rhos = 0.9 * 2.0 ** -np.arange(5)
    sups, slopes = [], []
    for k in (1, 2, 3):
        side = 4.0 ** -k
        mask = np.flatnonzero(np.isclose(field.sides, side))
        corners = [field.los[mask[0]], field.los[mask[-1]]]
        windows = [(c, float(side * r)) for c in corners for r in rhos]
        rep = full_cme(four_corner, sol, windows, rel_tol=0.05)
        vals = np.asarray(rep.values)
        assert len(vals) == 10
        rr = np.array([side * r for _ in corners for r in rhos])
        slope = np.polyfit(np.log(rr), np.log(vals * rr), 1)[0]
        sups.append(vals.max())
        slopes.append(slope)
    sups = np.array(sups)
    assert sups.max() / sups.min() <= 4.0, f"stage sups {sups}"
    for s in slopes:
        assert 0.8 <= s <= 1.2, f"slopes {slopes}"

    # no corkscrew at scales far above the finest squares
    m3 = np.flatnonzero(np.isclose(field.sides, 4.0 ** -3))
    corner = field.los[m3[0]]
    for r in (0.5, 1.0):
        with pytest.raises(CorkscrewNotFound):
            corkscrew_point(four_corner, corner, r)
    corkscrew_point(four_corner, corner, 4.0 ** -3)  # own scale still works


# ---------------------------------------------------------------------------
# 11: component locality


def test_11_foreign_component_measure_is_zero(four_corner):
    coll = four_corner.pieces[0]
    sides = coll.his[:, 0] - coll.los[:, 0]
    rng = np.random.default_rng(11)
    boxes = rng.choice(len(sides), size=3, replace=False)
    for run, b in enumerate(boxes):
        pole = 0.5 * (coll.los[b] + coll.his[b])
        own = int(four_corner.component_of(pole[None])[0])
        foreign = [(own + 1) % len(sides), (own + 7) % len(sides)]
        tg = ComponentTargets(four_corner, [own] + foreign)
        est = harmonic_measure(four_corner, pole, tg, paths=2000,
                               seed=1100 + run)
        assert float(est.mass[1]) == 0.0
        assert float(est.mass[2]) == 0.0
        assert float(est.mass[0]) + est.lost_mass == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# 12-13: tree passes vs exhaustive scans


def test_12_packing_norm_matches_double_loop(disk):
    g = build_grid(disk, depth=6)
    sig = np.array([g.cube_sigma(i) for i in range(g.n_cubes)])
    rng = np.random.default_rng(12)
    for _ in range(100):
        # dyadic-rational weights keep every partial sum exact in a double
        alpha = rng.integers(0, 2 ** 20, g.n_cubes).astype(float) / 2 ** 20
        tree_value = packing_norm(g, alpha)
        brute = max(float(alpha[g.descendants(i)].sum() / sig[i])
                    for i in range(g.n_cubes))
        assert tree_value == brute


def test_13_dyadic_maximal_matches_full_scan(disk):
    g = build_grid(disk, depth=6)
    sig = np.array([g.cube_sigma(i) for i in range(g.n_cubes)])
    rng = np.random.default_rng(13)
    for _ in range(100):
        w = rng.integers(1, 2 ** 20, len(g.leaves)).astype(float) / 2 ** 20
        mu = DiscreteMeasure(g, w)
        theta = rng.uniform(0, 2 * np.pi)
        x = np.array([np.cos(theta), np.sin(theta)])
        got, cube = dyadic_maximal(mu, x, return_cube=True)
        leaf = g.locate_point(x)
        masses = np.array([mu.cube_mass(i) for i in range(g.n_cubes)])
        holds = [i for i in range(g.n_cubes)
                 if g.leaf_lo[i] <= g.leaf_lo[leaf] < g.leaf_hi[i]]
        brute = max(float(masses[i] / sig[i]) for i in holds)
        assert got == brute
        assert cube in holds


# ---------------------------------------------------------------------------
# 14: coefficient functionals


def test_14_coefficient_functionals(disk):
    windows = [((1.0, 0.0), 0.5)]
    eye = np.eye(2)
    A = CoefficientField.constant(np.array([[2.0, 1.0], [1.0, 3.0]]))
    rep = coefficient_carleson(disk, (A, A), "fkp", windows)
    assert rep.sup == 0.0

    sym = CoefficientField.perturbation(
        2, lambda P: np.atleast_2d(P)[:, 0] * 0.1, eye,
        grad_b_fn=lambda P: np.tile([0.1, 0.0], (len(np.atleast_2d(P)), 1)))
    rep = coefficient_carleson(disk, sym, "divC", windows)
    assert rep.sup == 0.0

    # interior bump against a dense midpoint quadrature of |grad b|
    def b(P):
        P = np.atleast_2d(P)
        return np.maximum(0.0, 9.0 / 16 - (P ** 2).sum(axis=1)) ** 2

    def gb(P):
        P = np.atleast_2d(P)
        m = np.maximum(0.0, 9.0 / 16 - (P ** 2).sum(axis=1))
        return -4.0 * m[:, None] * P

    F = CoefficientField.perturbation(2, b, np.array([[1.0, 0.0], [0.0, 0.0]]),
                                      grad_b_fn=gb)
    rep = coefficient_carleson(disk, F, "gradL1", windows)

    h = 1.0 / 400
    ax = np.arange(-1.0, 1.0, h) + h / 2
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    P = np.stack([X.ravel(), Y.ravel()], axis=1)
    x0 = np.array([1.0, 0.0])
    keep = (np.linalg.norm(P, axis=1) < 1.0) & (np.linalg.norm(P - x0, axis=1) < 0.5)
    dense = np.linalg.norm(gb(P[keep]), axis=1).sum() * h * h
    dense /= disk.surface_ball_measure(x0, 0.5)
    assert abs(rep.sup - dense) <= 0.01 * dense


# ---------------------------------------------------------------------------
# 15: coherent refinement


def _chain_ok(grid, top, members):
    for q in members:
        i = q
        while i != top:
            i = int(grid.parent[i])
            if i < 0:
                return False
            if i != top and i not in members:
                return False
    return True


def _coherent_ok(grid, top, members):
    if not _chain_ok(grid, top, members):
        return False
    for q in members:
        kids = [int(c) for c in grid.children[q]]
        if kids and any(k in members for k in kids):
            if not all(k in members for k in kids):
                return False
    return True


def test_15_coherentize_refines_and_matches_brute_force(disk):
    # machine check on a produced decomposition
    g = build_grid(disk, depth=9)
    raw = exact_harmonic_measure(disk, g, [0.75, 0.0])
    mu = DiscreteMeasure(g, g.cube_sigma(0) * raw.leaf_masses)
    dec = iterate_corona(g, 0, "ainfty",
                         params={"beta": 0.5, "eta": 0.5, "K1": 1.0}, mu=mu)
    coh = coherentize(dec)
    src = {frozenset(r.cubes.tolist()) for r in dec.regimes}
    all_in = set()
    for piece in coh.regimes:
        assert is_coherent(g, piece)
        assert any(set(piece.cubes) <= s for s in src), "piece is not a refinement"
        all_in |= set(piece.cubes.tolist())
    union_src = set()
    for s in src:
        union_src |= s
    assert all_in == union_src

    # brute force over every semi-coherent regime of a 3-generation tree
    g3 = build_grid(disk, depth=3)
    top = int(g3.children[0][0])
    below = [int(q) for q in g3.descendants(top) if q != top]
    n_checked = 0
    for bits in range(2 ** len(below)):
        members = {top} | {below[j] for j in range(len(below)) if bits >> j & 1}
        if not _chain_ok(g3, top, members):
            continue
        n_checked += 1
        reg = Regime(top=top, q_s=0, x_s=np.zeros(2),
                     cubes=np.array(sorted(members)))
        pieces = _split_brute(g3, top, members)
        got = coherentize_single(g3, reg)
        assert sorted(got) == sorted(pieces)
        for piece in pieces:
            assert _coherent_ok(g3, piece[0], set(piece))
    assert n_checked > 20


def _split_brute(grid, top, members):
    """Each member joins the piece of its nearest ancestor that opens one:
    the top itself, or any cube with a sibling missing from the regime."""
    def opens(q):
        if q == top:
            return True
        kids = [int(c) for c in grid.children[int(grid.parent[q])]]
        return not all(k in members for k in kids)

    pieces = {}
    for q in members:
        t = q
        while not opens(t):
            t = int(grid.parent[t])
        pieces.setdefault(t, set()).add(q)
    return [sorted(v) for v in pieces.values()]


def coherentize_single(grid, regime):
    """Run the library splitter on a one-regime decomposition."""
    from coronalab.corona import CoronaDecomposition

    members = set(int(c) for c in regime.cubes)
    bad = [int(q) for q in grid.descendants(regime.top) if q not in members]
    dec = CoronaDecomposition(grid=grid, q0=regime.top, regimes=[regime],
                              bad=np.array(sorted(bad), dtype=np.int64),
                              packing=1.0, provenance={})
    out = coherentize(dec)
    return [sorted(int(c) for c in r.cubes) for r in out.regimes]


# ---------------------------------------------------------------------------
# 16: pipeline determinism


def test_16_pipeline_rerun_is_numerically_identical(tmp_path):
    cfg = {
        "domain": DISK_SPEC,
        "grid": {"depth": 5},
        "pole": [0.0, 0.0],
        "seed": 1616, "paths": 8000,
        "corona": {"rule": "basic", "params": {"N": 6}, "oracle": "wos"},
        "verify": {"modes": ["average"], "tolerance": 32.0},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    outs = []
    for tag in ("first", "second"):
        out = tmp_path / tag
        assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        outs.append((out / "report.json").read_bytes())
    assert outs[0] == outs[1]
