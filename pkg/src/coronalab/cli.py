"""Experiment runner: config in, reproducible report out.

One JSON config drives every stage.  Numeric payloads land in report.json
with sorted keys and no timestamps, so a rerun with the same config and
seed is byte-identical; wall-clock numbers go to a separate timings file.
Exit codes: 0 ok, 2 config problem, 3 stage failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .carleson import (
    CoefficientField,
    DiscreteCarlesonMeasure,
    coefficient_carleson,
    corkscrew_family,
    full_cme,
    packing_norm,
    partial_cme,
    reverse_holder,
    sweep_windows,
)
from .corona import coherentize, iterate_corona, verify_corona
from .dyadic import DiscreteMeasure, build_grid, verify_grid
from .errors import (
    ComputationError,
    ConfigError,
    ConfigInvalid,
    IoError,
    StageFailed,
)
from .geometry import make_domain
from .kernels import disk_green, halfspace_green
from .pde import (
    CapTargets,
    ComponentTargets,
    CubeTargets,
    RadiusTargets,
    boundary_solution,
    exact_cube_solution,
    exact_harmonic_measure,
    green_value,
    harmonic_measure,
)
from .whitney import build_whitney, verify_whitney

DEPTH_CAP = 16


# ---------------------------------------------------------------------------
# config plumbing


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def load_config(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigInvalid(f"config file {path} does not exist")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"config is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    return cfg


def _merge_flags(cfg: dict, args, keys) -> dict:
    out = json.loads(json.dumps(cfg))  # deep copy, JSON types only
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    return out


def _require(cfg, key, where):
    if key not in cfg:
        raise ConfigInvalid(f"{where} requires a {key!r} entry")
    return cfg[key]


def _depth_of(cfg) -> int:
    depth = cfg.get("depth", cfg.get("grid", {}).get("depth"))
    if depth is None:
        raise ConfigInvalid("no grid depth given (flag --depth or grid.depth)")
    depth = int(depth)
    if not 1 <= depth <= DEPTH_CAP:
        raise ConfigInvalid(f"depth {depth} outside [1, {DEPTH_CAP}]")
    return depth


def _stochastic_params(cfg, need_depth=True):
    """seed/paths/out (and depth) are mandatory for Monte Carlo stages."""
    missing = [k for k in ("seed", "paths", "out") if cfg.get(k) is None]
    if need_depth and cfg.get("depth") is None and "grid" not in cfg:
        missing.append("depth")
    if missing:
        raise ConfigInvalid(
            "stochastic stage needs explicit " + ", ".join(f"--{m}" for m in missing))
    seed = int(cfg["seed"])
    paths = int(cfg["paths"])
    if paths < 1:
        raise ConfigInvalid("paths must be positive")
    return seed, paths


def _out_dir(cfg) -> Path:
    out = cfg.get("out")
    if out is None:
        raise ConfigInvalid("no output directory given (--out)")
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ---------------------------------------------------------------------------
# report plumbing


def _jsonify(v):
    if isinstance(v, np.ndarray):
        return [_jsonify(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _jsonify(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonify(x) for x in v]
    return v


def new_report(cfg: dict) -> dict:
    # the output directory is plumbing, not an experiment parameter
    cfg = {k: v for k, v in cfg.items() if k != "out"}
    return {
        "config_sha256": config_hash(cfg),
        "config": _jsonify(cfg),
        "stages": {},
        "tables": {},
    }


def run_stage(report: dict, timings: dict, name: str, fn):
    t0 = time.perf_counter()
    try:
        payload = fn()
    except ConfigError:
        raise
    except ComputationError as e:
        raise StageFailed(f"stage {name!r} failed: {e}", stage=name) from e
    timings[name] = time.perf_counter() - t0
    report["stages"][name] = _jsonify(payload)
    return payload


def add_table(report: dict, name: str, header, rows):
    report["tables"][name] = {"header": list(header),
                              "rows": _jsonify([list(r) for r in rows])}


def write_report(report: dict, timings: dict, out: Path):
    (out / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    (out / "timings.json").write_text(
        json.dumps({k: round(v, 6) for k, v in timings.items()},
                   sort_keys=True, indent=2) + "\n")


def write_tables(report: dict, out: Path):
    written = []
    for name, tab in report.get("tables", {}).items():
        path = out / f"{name}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(tab["header"])
            w.writerows(tab["rows"])
        written.append(str(path))
    return written


# ---------------------------------------------------------------------------
# shared builders


def _domain_of(cfg):
    return make_domain(_require(cfg, "domain", "this command"))


def _grid_of(cfg, dom):
    return build_grid(dom, depth=_depth_of(cfg))


def _exact_oracle(dom, grid):
    def oracle(pole):
        return exact_harmonic_measure(dom, grid, pole)
    return oracle


def _wos_oracle(dom, grid, paths, seed):
    leaves = [int(q) for q in grid.leaves]
    targets = CubeTargets(grid, leaves)

    def oracle(pole):
        est = harmonic_measure(dom, pole, targets, paths=paths, seed=seed)
        return est.mass, est.ci

    return oracle


def _measure_oracle(cfg, dom, grid):
    kind = cfg.get("corona", {}).get("oracle", "exact")
    if kind == "exact":
        return _exact_oracle(dom, grid)
    if kind == "wos":
        seed, paths = _stochastic_params(cfg)
        return _wos_oracle(dom, grid, paths, seed)
    raise ConfigInvalid(f"unknown measure oracle {kind!r}")


def _green_oracle(dom):
    """Batched analytic Green oracle for the closed-form shapes."""
    shape = dom.meta.get("shape")
    if shape == "ball" and dom.dim == 2:
        piece = dom.pieces[0]
        c, R = np.asarray(piece.c, dtype=float), float(piece.R)

        def oracle(X, Z):
            Z = np.atleast_2d(np.asarray(Z, dtype=float))
            return np.array([disk_green(c, R, X, z) for z in Z])

        return oracle
    if shape == "half_space" and dom.dim == 2:
        def oracle(X, Z):
            Z = np.atleast_2d(np.asarray(Z, dtype=float))
            Zr = Z.copy()
            Zr[:, 1] = -Zr[:, 1]
            num = np.linalg.norm(np.asarray(X)[None] - Zr, axis=1)
            den = np.linalg.norm(np.asarray(X)[None] - Z, axis=1)
            return np.log(num / den) / (2.0 * np.pi)

        return oracle
    raise ConfigInvalid(f"no analytic Green oracle for shape {shape!r}")


def _targets_of(cfg, dom, grid=None):
    spec = _require(cfg, "target", "this measure stage")
    kind = spec.get("kind")
    if kind == "cubes":
        if grid is None:
            raise ConfigInvalid("cube targets need a grid depth")
        return CubeTargets(grid, spec.get("ids", []))
    if kind == "caps":
        return CapTargets(dom, [(c["axis"], float(c["alpha"]))
                                for c in spec.get("caps", [])])
    if kind == "components":
        return ComponentTargets(dom, spec.get("ids", []))
    if kind == "ball":
        return RadiusTargets(spec["center"], float(spec["radius"]))
    raise ConfigInvalid(f"unknown target kind {kind!r}")


def _windows_of(cfg, grid=None):
    spec = cfg.get("windows")
    if spec is None:
        raise ConfigInvalid("this stage needs a 'windows' entry")
    if isinstance(spec, dict):
        if grid is None:
            raise ConfigInvalid("window sweeps need a grid")
        return sweep_windows(grid, spec.get("gens", [2]),
                             factors=tuple(spec.get("factors", (1.0, 2.0))),
                             stride=int(spec.get("stride", 1)))
    return [(np.asarray(w[0], dtype=float), float(w[1])) for w in spec]


def _field_of(spec) -> CoefficientField:
    kind = spec.get("kind")
    if kind == "constant":
        return CoefficientField.constant(np.asarray(spec["matrix"], dtype=float),
                                         ellipticity=spec.get("ellipticity"))
    if kind == "bump":
        E = np.asarray(spec["E"], dtype=float)
        d = E.shape[0]
        amp = float(spec.get("amp", 1.0))
        x0 = np.asarray(spec.get("center", [0.0] * d), dtype=float)
        R2 = float(spec.get("radius", 0.75)) ** 2

        def b(P):
            P = np.atleast_2d(P)
            return amp * np.maximum(0.0, R2 - ((P - x0) ** 2).sum(axis=1)) ** 2

        def gb(P):
            P = np.atleast_2d(P)
            m = np.maximum(0.0, R2 - ((P - x0) ** 2).sum(axis=1))
            return -4.0 * amp * m[:, None] * (P - x0)

        return CoefficientField.perturbation(d, b, E, grad_b_fn=gb,
                                             ellipticity=spec.get("ellipticity"))
    raise ConfigInvalid(f"unknown coefficient field kind {kind!r}")


def _solution_of(cfg, dom, grid):
    spec = cfg.get("solution", {"kind": "cubes", "ids": [0]})
    kind = spec.get("kind", "cubes")
    if kind == "cubes":
        ids = spec.get("ids", [0])
        mode = spec.get("mode", "exact")
        if mode == "exact":
            return exact_cube_solution(dom, grid, ids)
        seed, paths = _stochastic_params(cfg)
        return boundary_solution(dom, targets=CubeTargets(grid, ids),
                                 seed=seed, paths=paths)
    raise ConfigInvalid(f"unknown solution kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_domain(args):
    cfg = _merge_flags(load_config(args.config), args, ("out",))
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        h = float(cfg.get("samples_h") or dom.diam_boundary() / 512)
        cloud = dom.sample_boundary(h)
        cols = ["x", "y", "z"][: dom.dim]
        rows = [list(map(float, p)) + [float(w), int(c)]
                for p, w, c in zip(cloud.points, cloud.weights, cloud.component)]
        add_table(report, "boundary_samples", cols + ["weight", "component_id"], rows)
        return {
            "dim": dom.dim,
            "shape": dom.meta.get("shape"),
            "n_samples": len(cloud.points),
            "sigma_exact": float(cloud.sigma_exact),
            "sigma_sampled": {"value": float(cloud.weights.sum()),
                              "err": abs(float(cloud.weights.sum()) - float(cloud.sigma_exact))},
            "diam_boundary": float(dom.diam_boundary()),
        }

    run_stage(report, timings, "domain", stage)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_grid(args):
    cfg = _merge_flags(load_config(args.config), args, ("out", "depth"))
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        grid = _grid_of(cfg, dom)
        rep = verify_grid(grid)
        add_table(report, "grid_cubes",
                  ["cube", "gen", "ell", "sigma"],
                  [[int(i), int(grid.gen[i]), float(grid.ell(i)),
                    float(grid.cube_sigma(i))] for i in range(grid.n_cubes)])
        return {
            "n_cubes": grid.n_cubes, "depth": grid.depth,
            "C1": float(grid.C1), "Xi": float(grid.Xi),
            "gamma": {"value": float(rep.gamma), "err": 0.0},
            "additivity_gap": float(rep.additivity_gap),
            "checks": {k: bool(v) for k, v in rep.checks.items()},
            "ok": bool(rep.ok),
        }

    run_stage(report, timings, "grid", stage)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_whitney(args):
    cfg = _merge_flags(load_config(args.config), args, ("out",))
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        min_len = cfg.get("whitney", {}).get("min_len")
        W = build_whitney(dom, min_len=min_len)
        rep = verify_whitney(W)
        cols = [f"corner_{c}" for c in ["x", "y", "z"][: W.dim]]
        add_table(report, "whitney_cubes", cols + ["len", "dist"],
                  [[float(v) for v in row] for row in W.to_rows()])
        return {
            "n_cubes": len(W), "min_len": float(W.min_len),
            "cutoff_hit": bool(W.cutoff_hit),
            "frac_4_40": float(rep.frac_4_40),
            "worst_upper": float(rep.worst_upper),
            "neighbor_ratio_ok": bool(rep.neighbor_ratio_ok),
            "ok": bool(rep.ok),
        }

    run_stage(report, timings, "whitney", stage)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_hm(args):
    cfg = _merge_flags(load_config(args.config), args,
                       ("out", "seed", "paths", "depth"))
    wants_grid = cfg.get("target", {}).get("kind") == "cubes"
    seed, paths = _stochastic_params(cfg, need_depth=wants_grid)
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        grid = _grid_of(cfg, dom) if cfg.get("target", {}).get("kind") == "cubes" else None
        targets = _targets_of(cfg, dom, grid)
        pole = np.asarray(_require(cfg, "pole", "hm"), dtype=float)
        est = harmonic_measure(dom, pole, targets, paths=paths, seed=seed,
                               eps_stop=cfg.get("monte_carlo", {}).get("eps_stop"))
        add_table(report, "harmonic_measure", ["label", "mass", "ci"],
                  [[lab, float(m), float(c)]
                   for lab, m, c in zip(est.labels, est.mass, est.ci)])
        return {
            "pole": [float(v) for v in est.pole],
            "labels": list(est.labels),
            "mass": {"value": [float(v) for v in est.mass],
                     "err": [float(v) for v in est.ci]},
            "lost_mass": float(est.lost_mass),
            "paths": est.paths, "seed": est.seed,
            "eps_stop": float(est.eps_stop),
        }

    run_stage(report, timings, "hm", stage)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_green(args):
    cfg = _merge_flags(load_config(args.config), args, ("out", "seed", "paths"))
    seed, paths = _stochastic_params(cfg, need_depth=False)
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        x = np.asarray(_require(cfg, "x", "green"), dtype=float)
        y = np.asarray(_require(cfg, "y", "green"), dtype=float)
        est = green_value(dom, x, y, paths=paths, seed=seed,
                          eps_stop=cfg.get("monte_carlo", {}).get("eps_stop"))
        return {
            "x": [float(v) for v in est.x], "y": [float(v) for v in est.y],
            "green": {"value": float(est.value), "err": float(est.ci)},
            "paths": est.paths, "lost": est.lost, "seed": est.seed,
        }

    run_stage(report, timings, "green", stage)
    write_report(report, timings, out)
    return 0


def _corona_stage(cfg, dom, grid, report):
    spec = cfg.get("corona", {})
    rule = spec.get("rule", "basic")
    if rule not in ("basic", "ainfty"):
        raise ConfigInvalid(f"unknown corona rule {rule!r}")
    params = spec.get("params", {})
    q0 = int(spec.get("q0", 0))
    if rule == "ainfty":
        raw = exact_harmonic_measure(dom, grid, np.asarray(
            _require(spec, "pole", "ainfty corona"), dtype=float))
        mu = DiscreteMeasure(grid, grid.cube_sigma(q0) * raw.leaf_masses)
        dec = iterate_corona(grid, q0, "ainfty", params=params, mu=mu)
    else:
        oracle = _measure_oracle(cfg, dom, grid)
        dec = iterate_corona(grid, q0, "basic", params=params,
                             omega_oracle=oracle,
                             bourgain_floor=spec.get("bourgain_floor", 1.0 / 16))
    if spec.get("coherent"):
        dec = coherentize(dec)
    add_table(report, "corona_regimes",
              ["top", "q_s", "n_cubes", "coherent", "truncated"],
              [[r.top, r.q_s, len(r.cubes), int(r.coherent), int(r.truncated)]
               for r in dec.regimes])
    return dec


def cmd_corona(args):
    cfg = _merge_flags(load_config(args.config), args,
                       ("out", "depth", "seed", "paths"))
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        grid = _grid_of(cfg, dom)
        dec = _corona_stage(cfg, dom, grid, report)
        d = dec.as_dict()
        d["packing"] = {"value": float(dec.packing), "err": 0.0}
        return d

    run_stage(report, timings, "corona", stage)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_verify(args):
    cfg = _merge_flags(load_config(args.config), args,
                       ("out", "depth", "seed", "paths"))
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        grid = _grid_of(cfg, dom)
        dec = _corona_stage(cfg, dom, grid, report)
        vcfg = cfg.get("verify", {})
        modes = vcfg.get("modes", [vcfg.get("mode", "average")])
        oracle = _measure_oracle(cfg, dom, grid)
        verdicts = {}
        for mode in modes:
            kw = {"omega_oracle": oracle, "mode": mode,
                  "tolerance": float(vcfg.get("tolerance", 32.0)),
                  "c": float(vcfg.get("c", 0.25))}
            if mode == "green":
                kw["green_oracle"] = _green_oracle(dom)
            v = verify_corona(dec, **kw)
            verdicts[mode] = {
                "passed": bool(v.passed),
                "min_ratio": float(v.min_ratio), "max_ratio": float(v.max_ratio),
                "tolerance": float(v.tolerance),
                "per_regime": v.per_regime,
            }
        add_table(report, "verify_ratios",
                  ["mode", "min_ratio", "max_ratio", "passed"],
                  [[m, d["min_ratio"], d["max_ratio"], int(d["passed"])]
                   for m, d in verdicts.items()])
        return {"packing": {"value": float(dec.packing), "err": 0.0},
                "verdicts": verdicts}

    run_stage(report, timings, "verify", stage)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_cme(args):
    cfg = _merge_flags(load_config(args.config), args,
                       ("out", "depth", "seed", "paths"))
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        grid = _grid_of(cfg, dom)
        spec = cfg.get("cme", {})
        kind = spec.get("kind", "full")
        solution = _solution_of(cfg, dom, grid)
        if kind == "full":
            windows = _windows_of(cfg, grid)
            rep = full_cme(dom, solution, windows,
                           min_len=spec.get("min_len"),
                           rel_tol=float(spec.get("rel_tol", 0.01)))
        elif kind == "partial":
            tau = float(spec.get("tau", 0.25))
            h = float(spec.get("h", tau / 8.0))
            tops = [int(q) for q in spec.get("tops", [0])]
            union = sorted({int(q) for t in tops for q in grid.descendants(t)})
            points = corkscrew_family(dom, grid, union)
            rep = partial_cme(grid, solution, points, tau=tau,
                              Q0_sweep=tops, h=h)
        else:
            raise ConfigInvalid(f"unknown cme kind {kind!r}")
        add_table(report, "cme_windows", ["window_id", "value"], rep.rows())
        d = rep.as_dict()
        d["sup"] = {"value": float(rep.sup), "err": float(rep.quad_err)}
        return d

    run_stage(report, timings, "cme", stage)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_coeff(args):
    cfg = _merge_flags(load_config(args.config), args, ("out", "depth"))
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def stage():
        spec = cfg.get("coeff", {})
        functional = _require(spec, "functional", "coeff")
        fspecs = _require(spec, "fields", "coeff")
        fields = [_field_of(f) for f in fspecs]
        grid = _grid_of(cfg, dom) if isinstance(cfg.get("windows"), dict) else None
        windows = _windows_of(cfg, grid)
        arg = tuple(fields) if functional == "fkp" else fields[0]
        rep = coefficient_carleson(dom, arg, functional, windows,
                                   h=spec.get("h"),
                                   allow_fd=bool(spec.get("allow_fd", True)),
                                   min_len=spec.get("min_len"))
        add_table(report, "coeff_windows", ["window_id", "value"], rep.rows())
        d = rep.as_dict()
        d["sup"] = {"value": float(rep.sup), "err": float(rep.quad_err)}
        return d

    run_stage(report, timings, "coeff", stage)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_run(args):
    cfg = _merge_flags(load_config(args.config), args,
                       ("out", "depth", "seed", "paths"))
    dom = _domain_of(cfg)
    out = _out_dir(cfg)
    report, timings = new_report(cfg), {}

    def st_domain():
        h = float(cfg.get("samples_h") or dom.diam_boundary() / 512)
        cloud = dom.sample_boundary(h)
        return {"dim": dom.dim, "shape": dom.meta.get("shape"),
                "n_samples": len(cloud.points),
                "sigma_exact": float(cloud.sigma_exact)}

    run_stage(report, timings, "domain", st_domain)

    grid_box = {}

    def st_grid():
        grid = _grid_of(cfg, dom)
        grid_box["grid"] = grid
        rep = verify_grid(grid)
        return {"n_cubes": grid.n_cubes, "depth": grid.depth,
                "C1": float(grid.C1), "Xi": float(grid.Xi),
                "gamma": {"value": float(rep.gamma), "err": 0.0},
                "ok": bool(rep.ok)}

    run_stage(report, timings, "grid", st_grid)
    grid = grid_box["grid"]

    def st_whitney():
        W = build_whitney(dom, min_len=cfg.get("whitney", {}).get("min_len"))
        rep = verify_whitney(W)
        return {"n_cubes": len(W), "frac_4_40": float(rep.frac_4_40),
                "ok": bool(rep.ok)}

    run_stage(report, timings, "whitney", st_whitney)

    def st_measure():
        pole = np.asarray(cfg.get("pole", dom.pieces[0].c
                                  if dom.meta.get("shape") == "ball"
                                  else [0.0, 1.0]), dtype=float)
        mu = exact_harmonic_measure(dom, grid, pole)
        gens = sorted({0, min(2, grid.depth)})
        masses = {str(int(q)): float(mu.cube_mass(int(q)))
                  for g in gens for q in grid.cubes_at(g)}
        return {"pole": [float(v) for v in pole],
                "cube_mass": {"value": masses, "err": 0.0},
                "total": float(mu.total)}

    run_stage(report, timings, "measure", st_measure)

    def st_corona():
        dec = _corona_stage(cfg, dom, grid, report)
        grid_box["dec"] = dec
        return {"n_regimes": len(dec.regimes),
                "packing": {"value": float(dec.packing), "err": 0.0},
                "provenance": dec.provenance}

    run_stage(report, timings, "corona", st_corona)

    def st_verify():
        dec = grid_box["dec"]
        vcfg = cfg.get("verify", {})
        modes = vcfg.get("modes", ["average"])
        oracle = _measure_oracle(cfg, dom, grid)
        verdicts = {}
        for mode in modes:
            kw = {"omega_oracle": oracle, "mode": mode,
                  "tolerance": float(vcfg.get("tolerance", 32.0))}
            if mode == "green":
                kw["green_oracle"] = _green_oracle(dom)
            v = verify_corona(dec, **kw)
            verdicts[mode] = {"passed": bool(v.passed),
                              "min_ratio": float(v.min_ratio),
                              "max_ratio": float(v.max_ratio)}
        return {"verdicts": verdicts}

    run_stage(report, timings, "verify", st_verify)

    def st_functionals():
        dec = grid_box["dec"]
        tops = DiscreteCarlesonMeasure.from_cubes(grid, sorted({r.top for r in dec.regimes}))
        vals = {"packing": {"value": float(packing_norm(grid, tops)), "err": 0.0}}
        rh = cfg.get("reverse_holder")
        if rh:
            pole = np.asarray(rh["pole"], dtype=float)
            mu = exact_harmonic_measure(dom, grid, pole)
            lhs, rhs, ratio = reverse_holder(grid, mu, float(rh.get("q", 2.0)),
                                             (np.asarray(rh["center"], dtype=float),
                                              float(rh["radius"])), pole=pole)
            vals["reverse_holder"] = {"value": float(ratio), "err": 0.0,
                                      "lhs": float(lhs), "rhs": float(rhs)}
        return vals

    run_stage(report, timings, "functionals", st_functionals)
    write_report(report, timings, out)
    write_tables(report, out)
    return 0


def cmd_render(args):
    path = Path(args.report)
    if not path.is_file():
        raise IoError(f"report file {path} does not exist")
    try:
        report = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise IoError(f"report is not valid JSON: {e}") from None
    if not report.get("stages"):
        raise IoError("report carries no stages; nothing to render")
    out = Path(args.out or path.parent)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "json":
        target = out / "report_rendered.json"
        target.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
        print(target)
        return 0
    written = write_tables(report, out)
    if not written:
        raise IoError("report carries no tables; nothing to render")
    for w in written:
        print(w)
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(p, *flags):
    if "config" in flags:
        p.add_argument("--config", required=True, help="JSON experiment config")
    if "out" in flags:
        p.add_argument("--out", help="output directory")
    if "seed" in flags:
        p.add_argument("--seed", type=int, help="master RNG seed")
    if "paths" in flags:
        p.add_argument("--paths", type=int, help="Monte Carlo path count")
    if "depth" in flags:
        p.add_argument("--depth", type=int, help="dyadic tree depth")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coronalab",
        description="boundary-geometry experiment pipelines")
    sub = ap.add_subparsers(dest="command", required=True)

    specs = [
        ("domain", cmd_domain, ("config", "out")),
        ("grid", cmd_grid, ("config", "out", "depth")),
        ("whitney", cmd_whitney, ("config", "out")),
        ("hm", cmd_hm, ("config", "out", "seed", "paths", "depth")),
        ("green", cmd_green, ("config", "out", "seed", "paths")),
        ("corona", cmd_corona, ("config", "out", "seed", "paths", "depth")),
        ("verify", cmd_verify, ("config", "out", "seed", "paths", "depth")),
        ("cme", cmd_cme, ("config", "out", "seed", "paths", "depth")),
        ("coeff", cmd_coeff, ("config", "out", "depth")),
        ("run", cmd_run, ("config", "out", "seed", "paths", "depth")),
    ]
    for name, fn, flags in specs:
        p = sub.add_parser(name)
        _add_common(p, *flags)
        p.set_defaults(func=fn)

    pr = sub.add_parser("render")
    pr.add_argument("--report", required=True, help="path to report.json")
    pr.add_argument("--format", choices=("json", "csv-bundle"),
                    default="csv-bundle")
    pr.add_argument("--out", help="output directory (default: next to report)")
    pr.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ComputationError as e:
        stage = getattr(e, "stage", None)
        where = f" in stage {stage!r}" if stage else ""
        print(f"failure{where}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
