"""Batch experiment runner: file-driven, deterministic, manifest-stamped.

    rankone-lab <geometry-check|orbit|measures|dynamics> --config PATH
                --out DIR [--verbose]

Exit codes: 0 success, 2 config error, 3 work budget exceeded (partial),
4 acceptance-band failure, 1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import random
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dynamics, groups, orbit, psmeasure, spaces
from .config import ConfigError, ExperimentConfig, load_config
from .errors import (BoundaryAmbiguityWarning, RankOneLabError,
                     WorkBudgetExceededError)
from .manifest import RunManifest
from .spaces import fmt17

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_BAND = 4


def _worker_cap() -> int:
    raw = os.environ.get("RANKONE_LAB_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _json_default(o):
    if isinstance(o, (np.bool_, np.integer, np.floating)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _write_json(path: Path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> int:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow(row)
            count += 1
    return count


# -- geometry check -------------------------------------------------------------

def _sample_h2_point(rng: random.Random) -> spaces.H2Point:
    return spaces.H2Point(complex(rng.uniform(-3, 3),
                                  math.exp(rng.uniform(-1, 1.5))))


def _sample_tree_point(space, rng: random.Random) -> spaces.TreePoint:
    word = ""
    for _ in range(rng.randrange(0, 5)):
        choices = [s for s in space.alphabet
                   if not word or s != spaces.tree.inv_letter(word[-1])]
        word += rng.choice(choices)
    return spaces.tree.make_vertex(word)


def _sample_boundary(space, rng: random.Random):
    kind = spaces.space_kind(space)
    if kind == "tree":
        prefix = _sample_tree_point(space, rng).word
        while True:
            period = "".join(rng.choice(space.alphabet)
                             for _ in range(rng.randrange(1, 3)))
            try:
                return spaces.tree.make_end(prefix, period)
            except RankOneLabError:
                continue
    theta = rng.uniform(0, spaces.TWO_PI)
    return (spaces.H2Boundary(theta) if kind == "h2"
            else spaces.E2Direction(theta))


def _sample_point(space, rng: random.Random):
    kind = spaces.space_kind(space)
    if kind == "h2":
        return _sample_h2_point(rng)
    if kind == "tree":
        return _sample_tree_point(space, rng)
    return spaces.E2Point(rng.uniform(-4, 4), rng.uniform(-4, 4))


def geometry_checks(cfg: ExperimentConfig, samples: int = 300) -> list[dict]:
    rng = random.Random(cfg.seed)
    space = cfg.space
    kind = spaces.space_kind(space)
    results = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        results.append({"check": name, "status": "pass" if ok else "fail",
                        "detail": detail})

    worst_cocycle = 0.0
    worst_bound = 0.0
    worst_speed = 0.0
    worst_sym = 0.0
    worst_zind = 0.0
    gr_negative = False
    for _ in range(samples):
        x, y, z = (_sample_point(space, rng) for _ in range(3))
        xi = _sample_boundary(space, rng)
        eta = _sample_boundary(space, rng)
        if xi == eta:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
            b_xz = spaces.busemann(space, xi, x, z)
            b_xy = spaces.busemann(space, xi, x, y)
            b_yz = spaces.busemann(space, xi, y, z)
            worst_cocycle = max(worst_cocycle, abs(b_xz - b_xy - b_yz))
            worst_bound = max(worst_bound,
                              abs(b_xy) - spaces.distance(space, x, y))
            if kind != "e2":
                v = spaces.geodesic_through(space, xi, eta, x)
                s_par, t_par = rng.uniform(-4, 4), rng.uniform(-4, 4)
                d = spaces.distance(space, spaces.line_point(space, v, s_par),
                                    spaces.line_point(space, v, t_par))
                worst_speed = max(worst_speed, abs(d - abs(s_par - t_par)))
                g1 = spaces.gromov_product(space, y, xi, eta)
                g2 = spaces.gromov_product(space, y, eta, xi)
                worst_sym = max(worst_sym, abs(g1 - g2))
                if g1 < -1e-9:
                    gr_negative = True
                z1 = spaces.line_point(space, v, rng.uniform(-3, 3))
                z2 = spaces.line_point(space, v, rng.uniform(-3, 3))
                half = 0.5 * (spaces.busemann(space, xi, y, z1)
                              + spaces.busemann(space, eta, y, z1))
                half2 = 0.5 * (spaces.busemann(space, xi, y, z2)
                               + spaces.busemann(space, eta, y, z2))
                worst_zind = max(worst_zind, abs(half - half2))
    check("cocycle_identity", worst_cocycle <= 1e-9, fmt17(worst_cocycle))
    check("busemann_bound", worst_bound <= 1e-9, fmt17(worst_bound))
    if kind != "e2":
        check("unit_speed", worst_speed <= 1e-9, fmt17(worst_speed))
        check("gromov_symmetric", worst_sym <= 1e-9, fmt17(worst_sym))
        check("gromov_nonnegative", not gr_negative)
        check("gromov_z_independent", worst_zind <= 1e-9, fmt17(worst_zind))

    if kind == "h2":
        x = spaces.H2Point(1 + 1j)
        y = spaces.H2Point(math.e ** 4 * (1 + 1j))
        r = spaces.distance(space, x, spaces.H2Point(math.sqrt(2) * 1j))
        xi = spaces.H2Boundary.from_real(0.0)
        eta = spaces.H2Boundary.from_real(math.inf)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
            corr = spaces.corridor_contains(space, r, x, y, xi, eta)
            m1 = spaces.refined_shadow_contains(space, r, x, y, eta, "-")
            m2 = spaces.refined_shadow_contains(space, r, y, x, xi, "-")
        check("corridor_excludes", (not corr) and m1 and m2,
              f"corridor={corr} minus_xy={m1} minus_yx={m2}")
    if kind == "e2":
        origin = spaces.E2Point(0.0, 0.0)
        r = 0.7
        ok = spaces.shadow_contains(space, r, spaces.E2Direction(math.pi),
                                    origin, spaces.E2Direction(0.0))
        ok = ok and not spaces.shadow_contains(
            space, r, spaces.E2Direction(math.pi), origin,
            spaces.E2Direction(0.3))
        mism = True
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
            for n in range(1, 6):
                phi = 1.0 / n
                zn = spaces.E2Point(-r * n * math.cos(phi),
                                    -r * n * math.sin(phi))
                inside = spaces.refined_shadow_contains(
                    space, r, zn, origin, spaces.E2Direction(phi), "-")
                outside = spaces.refined_shadow_contains(
                    space, r, zn, origin, spaces.E2Direction(0.0), "-")
                mism = mism and inside and not outside
        check("shadow_limit_mismatch", ok and mism)
    if kind == "tree":
        root = spaces.tree.make_vertex("")
        ok = True
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
            for r in (0.5, 1.0, 1.7, 2.0):
                bound = math.ceil(r) - 1
                for _ in range(80):
                    xi = _sample_boundary(space, rng)
                    eta = _sample_boundary(space, rng)
                    if xi == eta:
                        continue
                    line = spaces.geodesic_through(space, xi, eta, root)
                    d_line, _ = spaces.tree.project_to_line(space, line, root)
                    want = d_line <= bound
                    got = spaces.shadow_contains(space, r, xi, root, eta)
                    ok = ok and (want == got)
        check("tree_shadow_formula", ok)
    return results


def cmd_geometry_check(cfg: ExperimentConfig, out: Path,
                       manifest: RunManifest) -> int:
    results = geometry_checks(cfg)
    path = out / "geometry_report.json"
    _write_json(path, {"checks": results, "seed": cfg.seed})
    manifest.record_file(path, rows=len(results))
    for row in results:
        print(f"{row['check']}: {row['status']}")
    return EXIT_OK if all(r["status"] == "pass" for r in results) else EXIT_BAND


# -- orbit -----------------------------------------------------------------------

def _enumerate(cfg: ExperimentConfig):
    gp = cfg.presentation
    if gp is None:
        raise ConfigError("this command needs a [group] table")
    x = cfg.basepoints.get("x")
    y = cfg.basepoints.get("y", x)
    return orbit.enumerate_ball(gp, x, y, cfg.orbit_radius,
                                budget=cfg.orbit_budget)


def cmd_orbit(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> int:
    ball = _enumerate(cfg)
    space = cfg.space

    def rows():
        for i in range(len(ball.words)):
            d = ball.dists[i]
            direction = ball.direction(i)
            dir_text = "" if direction is None else \
                spaces.boundary_to_text(space, direction)
            yield (ball.words[i], fmt17(d), dir_text)

    p1 = out / "orbit_ball.csv"
    n1 = _write_csv(p1, ["word", "distance", "direction"], rows())
    manifest.record_file(p1, rows=n1)

    cc = orbit.counting_curve(ball)
    jumps = cc.jump_points()
    p2 = out / "counting_curve.csv"
    n2 = _write_csv(p2, ["radius", "count"],
                    ((fmt17(r), cc.count(r)) for r in jumps))
    manifest.record_file(p2, rows=n2)

    window = cfg.dynamics["window"]
    est = orbit.estimate_delta(cc, window)
    div = orbit.divergence_diagnostic(ball, est.delta_hat)
    report = {
        "count": len(ball.words),
        "radius": cfg.orbit_radius,
        "delta_hat": est.delta_hat,
        "method": est.method,
        "window": list(est.window),
        "residual": est.residual,
        "root_test": est.root_test,
        "disagreement": est.disagreement,
        "divergence": {
            "s": div.s,
            "radii": list(div.radii),
            "partial_sums": list(div.partial_sums),
            "increments": list(div.increments),
            "evidence": div.evidence,
            "tail_ratio": div.tail_ratio,
        },
    }
    p3 = out / "delta_report.json"
    _write_json(p3, report)
    manifest.record_file(p3)
    print(f"orbit: {len(ball.words)} elements, delta_hat={est.delta_hat:.6f}")
    return EXIT_OK


# -- measures --------------------------------------------------------------------

def cmd_measures(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> int:
    gp = cfg.presentation
    if gp is None:
        raise ConfigError("this command needs a [group] table")
    space = cfg.space
    x = cfg.basepoints.get("x")
    y = cfg.basepoints.get("y", x)
    x_alt = cfg.basepoints.get("x_alt")
    ball = _enumerate(cfg)
    cc = orbit.counting_curve(ball)
    est = orbit.estimate_delta(cc, cfg.dynamics["window"])
    s = cfg.s_for(est.delta_hat)
    bp = psmeasure.build_partition(space, cfg.resolution)
    mu = psmeasure.patterson_sullivan(ball, x, s, bp, delta_hat=est.delta_hat)

    p1 = out / "ps_measure.csv"
    n1 = _write_csv(p1, ["cell", "description", "weight"],
                    ((c.index, c.label, fmt17(mu.weights[c.index]))
                     for c in bp.cells))
    manifest.record_file(p1, rows=n1)

    current = psmeasure.gromov_current(mu, mu, space, x, est.delta_hat, bp)
    p2 = out / "current.csv"
    n2 = _write_csv(p2, ["cell_a", "cell_b", "weight"],
                    ((i, j, fmt17(w))
                     for (i, j), w in sorted(current.weights.items())))
    manifest.record_file(p2, rows=n2)

    report = {
        "s": s,
        "delta_hat": est.delta_hat,
        "resolution": cfg.resolution,
        "total_mass": mu.total_mass,
        "max_cell_mass": mu.max_cell_mass(),
        "mass_floor": cfg.mass_floor,
    }
    code = EXIT_OK
    if x_alt is not None:
        ball_alt = orbit.enumerate_ball(gp, x_alt, y, cfg.orbit_radius,
                                        budget=cfg.orbit_budget)
        conf = psmeasure.conformality_residual(
            ball, ball_alt, s, bp, x, x_alt, mass_floor=cfg.mass_floor)
        report["conformality"] = {
            "max_residual": conf.max_residual,
            "mean_residual": conf.mean_residual,
            "retained_cells": conf.retained_cells,
            "band": cfg.thresholds["conformality_band"],
        }
        if conf.max_residual > cfg.thresholds["conformality_band"]:
            code = EXIT_BAND
        print(f"conformality: max={conf.max_residual:.6f} over "
              f"{conf.retained_cells} cells")
    p3 = out / "measure_report.json"
    _write_json(p3, report)
    manifest.record_file(p3)
    return code


# -- dynamics --------------------------------------------------------------------

def cmd_dynamics(cfg: ExperimentConfig, out: Path, manifest: RunManifest) -> int:
    gp = cfg.presentation
    if gp is None:
        raise ConfigError("this command needs a [group] table")
    space = cfg.space
    x = cfg.basepoints.get("x")
    y = cfg.basepoints.get("y", x)
    ball = _enumerate(cfg)
    cc = orbit.counting_curve(ball)
    est = orbit.estimate_delta(cc, cfg.dynamics["window"])
    delta = est.delta_hat

    thresholds = dynamics.CountingThresholds(
        converge_ratio=cfg.thresholds["converge_ratio"],
        decay_fraction=cfg.thresholds["decay_fraction"],
        period_strength=cfg.thresholds["period_strength"])
    ca_report = dynamics.counting_asymptotic(
        cc, delta, cfg.dynamics["window"], cfg.dynamics["grid_step"],
        thresholds)
    p1 = out / "counting_asymptotic.csv"
    n1 = _write_csv(p1, ["radius", "value"],
                    ((fmt17(r), fmt17(v))
                     for r, v in zip(ca_report.grid, ca_report.values)))
    manifest.record_file(p1, rows=n1)

    # length spectrum and arithmeticity
    ls = groups.length_spectrum(gp, 4)
    arith = groups.arithmeticity_test(ls)

    # mixing series over the configured grid
    s = cfg.s_for(delta)
    bp = psmeasure.build_partition(space, cfg.resolution)
    mu = psmeasure.patterson_sullivan(ball, x, s, bp, delta_hat=delta)
    current = psmeasure.gromov_current(mu, mu, space, x, delta, bp)
    full = spaces.full_boundary(space)
    t_grid = []
    t = cfg.dynamics["t_start"]
    while t <= cfg.dynamics["t_stop"] + 1e-9:
        t_grid.append(round(t, 10))
        t += cfg.dynamics["t_step"]
    series = dynamics.mixing_series(current, space, gp, ball,
                                    cfg.dynamics["r"], x, y, full, full,
                                    t_grid)
    p2 = out / "mixing_series.csv"
    n2 = _write_csv(p2, ["t", "value"],
                    ((fmt17(t), fmt17(v))
                     for t, v in zip(series.t_grid, series.values)))
    manifest.record_file(p2, rows=n2)

    # equidistribution cross-check: f == 1 must reproduce the counting curve
    f_one = dynamics.TestFunction("one", "constant")
    eq = dynamics.equidist_statistic(ball, delta, [f_one],
                                     list(ca_report.grid))
    identity_gap = max(abs(a - b) for a, b in
                       zip(eq.values[0], ca_report.values))

    report = {
        "delta_hat": delta,
        "counting": {
            "classification": ca_report.classification,
            "trailing_mean": ca_report.trailing_mean,
            "trailing_min": ca_report.trailing_min,
            "trailing_max": ca_report.trailing_max,
            "period": ca_report.period,
            "period_strength": ca_report.period_strength,
        },
        "arithmeticity": {
            "kind": arith.kind,
            "generator": arith.generator,
            "confidence": arith.confidence,
            "tol": arith.tol,
        },
        "mixing": {
            "r": cfg.dynamics["r"],
            "t_grid": list(series.t_grid),
            "values": list(series.values),
            "trailing_oscillation": series.trailing_oscillation,
            "spectral_period": series.spectral_period,
            "spectral_strength": series.spectral_strength,
        },
        "equidist_identity_gap": identity_gap,
        "thresholds": dict(sorted(cfg.thresholds.items())),
        "workers": _worker_cap(),
    }
    p3 = out / "dynamics_report.json"
    _write_json(p3, report)
    manifest.record_file(p3)

    code = EXIT_OK
    expectations = cfg.raw.get("expectations", {})
    if "classification" in expectations and \
            expectations["classification"] != ca_report.classification:
        code = EXIT_BAND
    if "arithmetic" in expectations and \
            expectations["arithmetic"] != arith.kind:
        code = EXIT_BAND
    if "max_mixing_oscillation" in expectations and \
            series.trailing_oscillation > float(
                expectations["max_mixing_oscillation"]):
        code = EXIT_BAND
    if identity_gap > 1e-12:
        code = EXIT_BAND
    print(f"dynamics: classification={ca_report.classification} "
          f"arithmetic={arith.kind} mixing_osc="
          f"{series.trailing_oscillation:.4f}")
    return code


COMMANDS = {
    "geometry-check": cmd_geometry_check,
    "orbit": cmd_orbit,
    "measures": cmd_measures,
    "dynamics": cmd_dynamics,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rankone-lab", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    if not args.verbose:
        warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(args.command, cfg.digest)
    try:
        code = COMMANDS[args.command](cfg, out, manifest)
    except WorkBudgetExceededError as exc:
        print(f"budget exceeded: {exc} (completed depth "
              f"{exc.completed_depth})", file=sys.stderr)
        manifest.write(out)
        return EXIT_BUDGET
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RankOneLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    manifest.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
