"""Corona construction and verification checks.

Stopping rules run against exact harmonic measure and hand-built
subprobability vectors whose stopped families are known in advance;
coherent splitting is brute-forced over every semi-coherent subset of a
small tree with from-scratch chain and children checkers.
"""

import numpy as np
import pytest

from coronalab.corona import (
    CoronaDecomposition,
    CoronaVerdict,
    Regime,
    StoppingOutcome,
    ainfty_stopping,
    check_regime,
    coherentize,
    default_corkscrew,
    is_coherent,
    is_semi_coherent,
    iterate_corona,
    project_measure,
    stopping_time_basic,
    verify_corona,
)
from coronalab.dyadic import DiscreteMeasure, build_grid
from coronalab.errors import (
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
from coronalab.geometry import make_domain
from coronalab.pde import exact_harmonic_measure


@pytest.fixture(scope="module")
def disk():
    return make_domain({"shape": "ball", "d": 2, "center": [0.0, 0.0], "radius": 1.0})


@pytest.fixture(scope="module")
def g6(disk):
    return build_grid(disk, depth=6)


@pytest.fixture(scope="module")
def omega6(disk, g6):
    return lambda pole: exact_harmonic_measure(disk, g6, pole)


O = np.array([0.0, 0.0])


# ---------------------------------------------------------------------------
# regime structure


def test_regime_construction_and_checks(g6):
    t = int(g6.children[0][0])
    reg = Regime(cubes=g6.descendants(t), top=t, q_s=0, x_s=O)
    check_regime(g6, reg)
    assert reg.member_set() == set(int(c) for c in g6.descendants(t))
    d = reg.as_dict()
    assert d["top"] == t and d["q_s"] == 0 and not d["coherent"]
    with pytest.raises(ConfigError):
        Regime(cubes=[], top=0, q_s=0, x_s=O)


def test_check_regime_rejects_bad_shapes(g6):
    kids = [int(c) for c in g6.children[0]]
    t = kids[0]
    # top outside the member set
    with pytest.raises(ConfigError):
        check_regime(g6, Regime(cubes=[t + 1], top=t, q_s=0, x_s=O))
    # member outside the top's subtree
    with pytest.raises(ConfigError):
        check_regime(g6, Regime(cubes=[t, kids[1]], top=t, q_s=0, x_s=O))
    # Q_S below the top
    sub = int(g6.children[t][0])
    with pytest.raises(ConfigError):
        check_regime(g6, Regime(cubes=[t], top=t, q_s=sub, x_s=O))


def test_coherency_predicates(g6):
    t = int(g6.children[0][0])
    full = Regime(cubes=g6.descendants(t), top=t, q_s=t, x_s=O)
    assert is_semi_coherent(g6, full) and is_coherent(g6, full)

    kids = [int(c) for c in g6.children[t]]
    half = Regime(cubes=[t, kids[0]], top=t, q_s=t, x_s=O)
    assert is_semi_coherent(g6, half)
    assert not is_coherent(g6, half)  # one child in, one out

    gc = int(g6.children[kids[0]][0])
    gap = Regime(cubes=[t, gc], top=t, q_s=t, x_s=O)
    assert not is_semi_coherent(g6, gap)


def test_stopping_outcome_rejects_overlap(g6):
    with pytest.raises(ConfigError):
        StoppingOutcome(q=0, pole=O, f_plus=[3], f_minus=[3],
                        tree=np.array([0]))


# ---------------------------------------------------------------------------
# basic stopping rule


def _partition_ok(grid, out):
    covered = set(int(i) for i in out.tree)
    for s in out.stopped:
        sub = set(int(i) for i in grid.descendants(s))
        assert not (covered & sub)
        covered |= sub
    assert covered == set(int(i) for i in grid.descendants(out.q))


def test_stopping_disk_keeps_everything(disk, g6, omega6):
    out = stopping_time_basic(g6, 0, omega6, N=6)
    assert out.f_plus == [] and out.f_minus == []
    assert np.array_equal(out.tree, g6.descendants(0))
    assert out.meta["omega_at_q"] == pytest.approx(1.0, abs=1e-12)
    assert disk.contains(out.pole[None])[0]
    _partition_ok(g6, out)


def test_stopping_starving_child_stops_low(g6):
    N = 6
    sig = g6.sigma_vector()
    c = int(g6.children[0][0])
    w = sig[g6.leaves] / sig[0]
    r0, r1 = int(g6.leaf_lo[c]), int(g6.leaf_hi[c])
    w[r0:r1] *= 2.0 ** (-N - 2)
    out = stopping_time_basic(g6, 0, lambda pole: w, N=N)
    assert out.f_minus == [c]
    assert out.f_plus == []
    _partition_ok(g6, out)
    assert out.meta["fminus_sigma"] == pytest.approx(sig[c])


def test_stopping_atom_fires_high_family(disk):
    # a unit atom: ancestor averages of the rooted maximal function grow
    # like 2^(g/2), crossing the 2^(2N) band at generation 3 for N = 2
    g = build_grid(disk, depth=10)
    w = np.zeros(len(g.leaves))
    w[0] = 1.0
    out = stopping_time_basic(g, 0, lambda pole: w, N=2)
    assert len(out.f_plus) == 1
    assert int(g.gen[out.f_plus[0]]) == 3
    _partition_ok(g, out)
    # stopped surface bound in units of 2^-N sigma(Q)
    assert out.meta["fplus_sigma_ratio"] <= 4.0


def test_stopping_rechecks_the_root(g6):
    # a pole that sees almost nothing of its own cube is an oracle fault,
    # even though the descent itself stops every child without complaint
    w = g6.sigma_vector()[g6.leaves] / g6.cube_sigma(0) * 2.0 ** (-8)
    with pytest.raises(OracleFailure):
        stopping_time_basic(g6, 0, lambda pole: w, N=6)


def test_stopping_guards(g6, omega6):
    with pytest.raises(PreconditionViolated):
        stopping_time_basic(g6, 0, omega6, N=1)
    deep = int(g6.cubes_at(5)[0])
    with pytest.raises(DepthInsufficient):
        stopping_time_basic(g6, deep, omega6, N=6)


def test_stopping_rejects_malformed_oracles(g6):
    with pytest.raises(OracleFailure):
        stopping_time_basic(g6, 0, lambda pole: np.ones(3), N=6)
    bad = np.full(len(g6.leaves), 1.0)  # total far above 1
    with pytest.raises(OracleFailure):
        stopping_time_basic(g6, 0, lambda pole: 5.0 * bad, N=6)
    neg = g6.sigma_vector()[g6.leaves] / g6.cube_sigma(0)
    neg[0] = -neg[0]
    with pytest.raises(OracleFailure):
        stopping_time_basic(g6, 0, lambda pole: neg, N=6)


def test_stopping_ci_keeps_straddling_cubes(disk):
    g = build_grid(disk, depth=5)
    N = 4
    lo_thr = 2.0 ** (-N)
    sig = g.sigma_vector()
    c = int(g.children[0][0])
    w = sig[g.leaves] / sig[0]
    r0, r1 = int(g.leaf_lo[c]), int(g.leaf_hi[c])
    w[r0:r1] *= 0.9 * lo_thr
    # sharp masses: the child is decisively below the band
    out = stopping_time_basic(g, 0, lambda pole: w, N=N)
    assert out.f_minus == [c]
    # wide confidence: the same child straddles the threshold and is kept
    n_c = r1 - r0
    ci = np.zeros(len(g.leaves))
    ci[r0:r1] = 0.3 * lo_thr * sig[c] / sig[0] / np.sqrt(n_c)
    out2 = stopping_time_basic(g, 0, lambda pole: (w, ci), N=N)
    assert c not in out2.f_minus
    assert c in out2.meta["ambiguous"]


# ---------------------------------------------------------------------------
# ampleness stopping rule


def test_ainfty_uniform_measure_never_stops(g6):
    mu = DiscreteMeasure.sigma(g6)
    F, alpha, K2 = ainfty_stopping(g6, 0, mu, beta=0.5, eta=0.5, K1=1.0)
    assert F == [] and alpha == 0.0
    assert K2 == pytest.approx(1.0, rel=1e-12)


def test_ainfty_starved_child_stops(g6):
    beta = 0.5
    sig = g6.sigma_vector()
    kids = [int(c) for c in g6.children[0]]
    c = kids[0]
    w = sig[g6.leaves].copy()
    r0, r1 = int(g6.leaf_lo[c]), int(g6.leaf_hi[c])
    w[r0:r1] *= beta / 4.0
    # keep the total at sigma so the hypothesis ratio stays 1
    w[~np.isin(np.arange(len(w)), np.arange(r0, r1))] *= (
        (sig[0] - beta / 4.0 * sig[c]) / (sig[0] - sig[c]))
    mu = DiscreteMeasure(g6, w)
    assert mu.total == pytest.approx(sig[0], rel=1e-12)
    F, alpha, K2 = ainfty_stopping(g6, 0, mu, beta=beta, eta=0.5, K1=2.0)
    assert F == [c]
    assert alpha == pytest.approx(sig[c] / sig[0], rel=1e-12)
    assert K2 < 2.0 / 0.5


def test_ainfty_guards(g6):
    mu = DiscreteMeasure.sigma(g6)
    half = DiscreteMeasure(g6, 0.5 * mu.leaf_masses)
    with pytest.raises(HypothesisViolated):
        ainfty_stopping(g6, 0, half, beta=0.5, eta=0.5, K1=1.0)
    with pytest.raises(PreconditionViolated):
        ainfty_stopping(g6, 0, mu, beta=0.0, eta=0.5, K1=1.0)
    with pytest.raises(PreconditionViolated):
        ainfty_stopping(g6, 0, mu, beta=0.5, eta=0.5, K1=0.5)
    other = build_grid(g6.domain, depth=3)
    with pytest.raises(ConfigError):
        ainfty_stopping(g6, 0, DiscreteMeasure.sigma(other), beta=0.5,
                        eta=0.5, K1=1.0)


# ---------------------------------------------------------------------------
# iteration


def test_iterate_basic_disk_single_regime(g6, omega6):
    dec = iterate_corona(g6, 0, "basic", params={"N": 6}, omega_oracle=omega6)
    assert len(dec.regimes) == 1
    assert dec.bad == []
    assert dec.packing == pytest.approx(1.0, rel=1e-12)
    reg = dec.regimes[0]
    assert reg.top == 0 and not reg.truncated
    assert np.array_equal(reg.cubes, g6.descendants(0))
    prov = dec.provenance
    assert prov["rule"] == "basic"
    assert prov["packing_all"] == prov["packing_untruncated"]
    assert prov["levels"][0]["n_stopped"] == 0


def test_iterate_bourgain_floor(g6):
    w = g6.sigma_vector()[g6.leaves] / g6.cube_sigma(0) * 0.05
    with pytest.raises(OracleFailure):
        iterate_corona(g6, 0, "basic", params={"N": 6},
                       omega_oracle=lambda pole: w)
    dec = iterate_corona(g6, 0, "basic", params={"N": 6},
                         omega_oracle=lambda pole: w, bourgain_floor=None)
    assert len(dec.regimes) == 1


def test_iterate_ainfty_levels_shrink(disk):
    g = build_grid(disk, depth=7)
    raw = exact_harmonic_measure(disk, g, np.array([0.6, 0.0]))
    mu = DiscreteMeasure(g, g.cube_sigma(0) * raw.leaf_masses)
    dec = iterate_corona(g, 0, "ainfty",
                         params={"beta": 0.5, "eta": 0.5, "K1": 1.0}, mu=mu)
    assert len(dec.regimes) >= 2
    for lv in dec.provenance["levels"]:
        assert lv["sigma_stopped"] < lv["sigma_tops"]
    assert dec.packing >= 1.0
    assert dec.provenance["packing_all"] >= dec.provenance["packing_untruncated"]


def test_iterate_guards(g6, omega6):
    with pytest.raises(ConfigError):
        iterate_corona(g6, 0, "mystery", omega_oracle=omega6)
    with pytest.raises(ConfigError):
        iterate_corona(g6, 0, "basic")
    with pytest.raises(ConfigError):
        iterate_corona(g6, 0, "ainfty")
    g7 = build_grid(g6.domain, depth=7)
    raw = exact_harmonic_measure(g6.domain, g7, np.array([0.6, 0.0]))
    mu = DiscreteMeasure(g7, g7.cube_sigma(0) * raw.leaf_masses)
    with pytest.raises(NonTermination):
        iterate_corona(g7, 0, "ainfty",
                       params={"beta": 0.5, "eta": 0.5, "K1": 1.0}, mu=mu,
                       max_rounds=1)


# ---------------------------------------------------------------------------
# coherent splitting


def _chain_ok(S, t, parent):
    for q in S:
        while q != t:
            q = int(parent[q])
            if q not in S:
                return False
    return True


def _coherent_ok(S, t, grid):
    # written from scratch: chains closed, children all-in or all-out
    if t not in S or not _chain_ok(S, t, grid.parent):
        return False
    for q in S:
        kids = [int(c) for c in grid.children[q]]
        if kids:
            hits = sum(1 for c in kids if c in S)
            if hits not in (0, len(kids)):
                return False
    return True


def test_coherentize_identity_on_coherent_partition(g6):
    kids = [int(c) for c in g6.children[0]]
    regs = [Regime(cubes=[0] + kids, top=0, q_s=0, x_s=O)]
    for k in kids:
        for gc in g6.children[k]:
            regs.append(Regime(cubes=g6.descendants(int(gc)), top=int(gc),
                               q_s=0, x_s=O))
    dec = CoronaDecomposition(grid=g6, q0=0, bad=[], regimes=regs, packing=1.0)
    out = coherentize(dec)
    got = {frozenset(r.member_set()) for r in out.regimes}
    want = {frozenset(r.member_set()) for r in regs}
    assert got == want
    assert all(r.coherent for r in out.regimes)
    assert out.provenance["coherentized"]


def test_coherentize_splits_sibling_gap(disk):
    g = build_grid(disk, depth=2)
    kids = [int(c) for c in g.children[0]]
    c = kids[0]
    # root plus one child subtree: the surviving child opens a new piece
    cubes = [0] + [int(i) for i in g.descendants(c)]
    regs = [Regime(cubes=cubes, top=0, q_s=0, x_s=O)]
    bad = [q for q in map(int, g.descendants(0)) if q not in set(cubes)]
    dec = CoronaDecomposition(grid=g, q0=0, bad=bad, regimes=regs, packing=1.0)
    out = coherentize(dec)
    pieces = sorted(({int(i) for i in r.cubes} for r in out.regimes), key=len)
    assert pieces == [{0}, set(map(int, g.descendants(c)))]
    assert all(r.q_s == 0 for r in out.regimes)  # inherited from the source


def test_coherentize_brute_force_all_semi_coherent_sets(disk):
    g = build_grid(disk, depth=3)
    t = int(g.children[0][0])
    below = [int(i) for i in g.descendants(t)]
    rest = below[1:]
    full = set(map(int, g.descendants(t)))
    n_checked = 0
    for mask in range(2 ** len(rest)):
        S = {t} | {rest[j] for j in range(len(rest)) if mask >> j & 1}
        if not _chain_ok(S, t, g.parent):
            continue
        n_checked += 1
        dec = CoronaDecomposition(
            grid=g, q0=t, bad=sorted(full - S),
            regimes=[Regime(cubes=sorted(S), top=t, q_s=t, x_s=O)],
            packing=1.0)
        out = coherentize(dec)
        pieces = [set(map(int, r.cubes)) for r in out.regimes]
        # partition of S
        assert sorted(q for p in pieces for q in p) == sorted(S)
        # every piece coherent, per the independent checker
        tops = [r.top for r in out.regimes]
        for p, tp in zip(pieces, tops):
            assert _coherent_ok(p, tp, g)
        # maximality: absorbing a piece into the one holding its parent
        # always breaks coherency
        where = {q: k for k, p in enumerate(pieces) for q in p}
        for k, tp in enumerate(tops):
            if tp == t:
                continue
            par = int(g.parent[tp])
            j = where[par]
            merged = pieces[j] | pieces[k]
            assert not _coherent_ok(merged, tops[j], g)
    assert n_checked > 20


def test_coherentize_rejects_chain_gaps(disk):
    g = build_grid(disk, depth=2)
    t = int(g.children[0][0])
    gc = int(g.children[t][0])
    others = [int(i) for i in g.descendants(t) if int(i) not in (t, gc)]
    dec = CoronaDecomposition(
        grid=g, q0=t, bad=others,
        regimes=[Regime(cubes=[t, gc], top=t, q_s=t, x_s=O)], packing=1.0)
    # {t, grandchild} skips the middle generation
    bad_dec = CoronaDecomposition(
        grid=g, q0=t, bad=[q for q in map(int, g.descendants(t))
                           if q not in (t, int(g.children[gc][0]) if g.children[gc] else -1)],
        regimes=[Regime(cubes=[t] + ([int(g.children[gc][0])] if g.children[gc] else [gc]),
                        top=t, q_s=t, x_s=O)], packing=1.0) if g.children[gc] else None
    out = coherentize(dec)  # child gap between siblings is fine
    assert len(out.regimes) == 2
    if bad_dec is not None:
        with pytest.raises(NotSemiCoherent):
            coherentize(bad_dec)


# ---------------------------------------------------------------------------
# partition container


def test_decomposition_partition_enforced(g6):
    sub = g6.descendants(0)
    with pytest.raises(ConfigError):  # overlapping regimes
        CoronaDecomposition(grid=g6, q0=0, bad=[], packing=1.0, regimes=[
            Regime(cubes=sub, top=0, q_s=0, x_s=O),
            Regime(cubes=[int(g6.children[0][0])], top=int(g6.children[0][0]),
                   q_s=0, x_s=O)])
    with pytest.raises(ConfigError):  # hole
        CoronaDecomposition(grid=g6, q0=0, bad=[], packing=1.0, regimes=[
            Regime(cubes=[0], top=0, q_s=0, x_s=O)])
    with pytest.raises(ConfigError):  # bad set meets a regime
        CoronaDecomposition(grid=g6, q0=0, bad=[0], packing=1.0, regimes=[
            Regime(cubes=sub, top=0, q_s=0, x_s=O)])


def test_verdict_flag_must_match_ratios():
    with pytest.raises(ConfigError):
        CoronaVerdict(mode="average", per_regime=[{"top": 0}], min_ratio=0.5,
                      max_ratio=2.0, tolerance=32.0, passed=False)


# ---------------------------------------------------------------------------
# verification


def test_verify_average_and_strong_pass_on_disk(g6, omega6):
    dec = iterate_corona(g6, 0, "basic", params={"N": 6}, omega_oracle=omega6)
    for mode in ("average", "strong"):
        v = verify_corona(dec, omega_oracle=omega6, mode=mode, tolerance=32.0)
        assert v.passed, (mode, v.min_ratio, v.max_ratio)
        assert v.per_regime[0]["n_cubes"] == g6.n_cubes


def test_verify_average_fails_for_displaced_pole(disk):
    g = build_grid(disk, depth=8)
    qs = int(g.cubes_at(8)[0])
    ell = g.ell(qs)
    xq = g.center[qs]
    n_out = xq / np.linalg.norm(xq)
    tang = np.array([-n_out[1], n_out[0]])
    far = xq - ell * n_out + 100.0 * ell * tang
    far /= max(1.0, np.linalg.norm(far) / (1 - ell))
    dec = CoronaDecomposition(
        grid=g, q0=qs, bad=[], packing=1.0,
        regimes=[Regime(cubes=g.descendants(qs), top=qs, q_s=qs, x_s=far)])
    oracle = lambda pole: exact_harmonic_measure(disk, g, pole)
    v = verify_corona(dec, omega_oracle=oracle, mode="average", tolerance=32.0)
    assert not v.passed
    assert v.min_ratio < 1.0 / 32.0


def test_verify_green_halfplane(disk):
    hs = make_domain({"shape": "half_space", "d": 2})
    gh = build_grid(hs, depth=6)
    oracle = lambda pole: exact_harmonic_measure(hs, gh, pole)

    def green_batch(X, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        Zr = Z.copy()
        Zr[:, 1] = -Zr[:, 1]
        return np.log(np.linalg.norm(X[None] - Zr, axis=1)
                      / np.linalg.norm(X[None] - Z, axis=1)) / (2 * np.pi)

    qs = int(gh.cubes_at(4)[7])
    pole = np.array([gh.center[qs][0], 1.2 * 4 * gh.Xi * gh.ell(qs)])
    dec = CoronaDecomposition(
        grid=gh, q0=qs, bad=[], packing=1.0,
        regimes=[Regime(cubes=gh.descendants(qs), top=qs, q_s=qs, x_s=pole)])
    v = verify_corona(dec, omega_oracle=oracle, green_oracle=green_batch,
                      mode="green", tolerance=32.0)
    assert v.passed
    # the flat-boundary identity makes the comparison nearly exact
    assert 0.9 <= v.min_ratio and v.max_ratio <= 1.1

    # a pole hugging the boundary violates the clearance precondition
    low = CoronaDecomposition(
        grid=gh, q0=qs, bad=[], packing=1.0,
        regimes=[Regime(cubes=gh.descendants(qs), top=qs, q_s=qs,
                        x_s=np.array([gh.center[qs][0], 0.1]))])
    with pytest.raises(GeometryViolated):
        verify_corona(low, omega_oracle=oracle, green_oracle=green_batch,
                      mode="green")


def test_verify_green_scalar_oracle_fallback(disk):
    hs = make_domain({"shape": "half_space", "d": 2})
    gh = build_grid(hs, depth=6)
    oracle = lambda pole: exact_harmonic_measure(hs, gh, pole)
    from coronalab.kernels import halfspace_green

    qs = int(gh.cubes_at(5)[3])
    pole = np.array([gh.center[qs][0], 1.2 * 4 * gh.Xi * gh.ell(qs)])
    dec = CoronaDecomposition(
        grid=gh, q0=qs, bad=[], packing=1.0,
        regimes=[Regime(cubes=gh.descendants(qs), top=qs, q_s=qs, x_s=pole)])
    v = verify_corona(dec, omega_oracle=oracle,
                      green_oracle=lambda X, Z: halfspace_green(2, X, Z),
                      mode="green", tolerance=32.0)
    assert v.passed and 0.9 <= v.min_ratio


def test_verify_vacuous_and_guards(g6, omega6):
    empty = CoronaDecomposition(
        grid=g6, q0=0, bad=[int(i) for i in g6.descendants(0)], regimes=[],
        packing=0.0)
    v = verify_corona(empty, omega_oracle=omega6, mode="average")
    assert v.passed and v.min_ratio == 1.0 and v.max_ratio == 1.0

    dec = iterate_corona(g6, 0, "basic", params={"N": 6}, omega_oracle=omega6)
    with pytest.raises(ConfigError):
        verify_corona(dec, omega_oracle=omega6, mode="sideways")
    with pytest.raises(ConfigError):
        verify_corona(dec, omega_oracle=omega6, mode="average", tolerance=0.5)
    with pytest.raises(ConfigError):
        verify_corona(dec, mode="average")
    with pytest.raises(ConfigError):
        verify_corona(dec, omega_oracle=omega6, mode="green")


# ---------------------------------------------------------------------------
# measure projection


def test_project_measure_identities(disk):
    g = build_grid(disk, depth=4)
    rng = np.random.default_rng(5)
    mu = DiscreteMeasure(g, rng.random(len(g.leaves)))
    kids = [int(c) for c in g.children[0]]
    c = kids[0]
    gc = int(g.children[c][0])

    # empty family: plain restriction
    assert project_measure(g, [], mu, [c]) == pytest.approx(mu.cube_mass(c),
                                                            rel=1e-12)
    # family member: sigma-proportional fill
    want = g.cube_sigma(gc) / g.cube_sigma(c) * mu.cube_mass(c)
    assert project_measure(g, [c], mu, [gc]) == pytest.approx(want, rel=1e-12)
    # total mass is preserved
    assert project_measure(g, [c], mu, [0]) == pytest.approx(mu.total, rel=1e-12)
    # a set disjoint from the family is untouched
    assert project_measure(g, [c], mu, [kids[1]]) == pytest.approx(
        mu.cube_mass(kids[1]), rel=1e-12)


def test_project_measure_spreads_point_mass(disk):
    g = build_grid(disk, depth=4)
    c = int(g.children[0][0])
    w = np.zeros(len(g.leaves))
    w[int(g.leaf_lo[c])] = 1.0  # all mass on one leaf inside c
    mu = DiscreteMeasure(g, w)
    for gc in map(int, g.children[c]):
        got = project_measure(g, [c], mu, [gc])
        assert got == pytest.approx(g.cube_sigma(gc) / g.cube_sigma(c), rel=1e-12)


def test_project_measure_rejects_overlapping_family(disk):
    g = build_grid(disk, depth=4)
    mu = DiscreteMeasure.sigma(g)
    with pytest.raises(FamilyNotDisjoint):
        project_measure(g, [0, int(g.children[0][0])], mu, [0])


def test_default_corkscrew_points_inside(disk, g6):
    pick = default_corkscrew(disk, g6)
    for q in map(int, g6.cubes_at(3)[:4]):
        p = pick(q)
        assert disk.contains(p[None])[0]
        d = float(disk.boundary_distance(p[None])[0])
        assert d >= 0.2 * 0.25 * g6.ell(q)
