"""Experiment configuration: one TOML document per run.

The config names the model space, the group presentation, basepoints,
radii and grids, partition resolution, thresholds, and the seed for the
sampling-based property checks.  Every threshold echoed into reports
comes from here.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import groups, spaces
from .errors import RankOneLabError
from .spaces import ArcSet, CylinderSet, make_arc


class ConfigError(RankOneLabError):
    """Configuration file is missing keys or fails validation."""


@dataclass
class ExperimentConfig:
    raw: dict
    path: str
    digest: str
    seed: int
    space: spaces.ModelSpace
    presentation: Optional[groups.GroupPresentation]
    basepoints: dict
    orbit_radius: float
    orbit_budget: int
    resolution: int
    s_mode: str
    s_value: Optional[float]
    mass_floor: float
    dynamics: dict
    thresholds: dict

    def s_for(self, delta_hat: float) -> float:
        if self.s_mode == "explicit":
            return float(self.s_value)
        if self.s_mode == "offset":
            return delta_hat + float(self.s_value)
        return delta_hat * (1.0 + 1.0 / self.orbit_radius)


_DEFAULT_THRESHOLDS = {
    "converge_ratio": 1.2,
    "trailing_ratio": 1.5,
    "period_tol": 0.05,
    "period_strength": 0.2,
    "mixing_oscillation": 0.3,
    "decay_fraction": 0.5,
    "conformality_band": 0.15,
    "equidist_band": 0.15,
}


def _require(table: dict, key: str, context: str) -> Any:
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{context}]")
    return table[key]


def _build_space(table: dict) -> spaces.ModelSpace:
    kind = _require(table, "kind", "space")
    if kind == "h2":
        return spaces.H2Space()
    if kind == "e2":
        return spaces.E2Space()
    if kind == "tree":
        gens = _require(table, "generators", "space")
        lengths_tbl = _require(table, "edge_lengths", "space")
        lengths = [float(lengths_tbl[g]) for g in gens]
        return spaces.tree_space(gens, lengths)
    raise ConfigError(f"unknown space kind {kind!r}")


def _build_presentation(space, table: dict, basepoint) -> groups.GroupPresentation:
    kind = _require(table, "kind", "group")
    if kind == "tree_free":
        if spaces.space_kind(space) != "tree":
            raise ConfigError("tree_free group needs a tree space")
        return groups.tree_free_presentation(space)
    if kind == "h2_schottky":
        if spaces.space_kind(space) != "h2":
            raise ConfigError("h2_schottky group needs the hyperbolic plane")
        mats_tbl = _require(table, "matrices", "group")
        matrices = {name: tuple(float(v) for v in vals)
                    for name, vals in mats_tbl.items()}
        for name, m in matrices.items():
            if len(m) != 4:
                raise ConfigError(f"matrix {name!r} needs four decimals")
        domains = None
        if "domains" in table:
            domains = {}
            for name, arcs in table["domains"].items():
                domains[name] = ArcSet([make_arc(float(a), float(b),
                                                 True, True)
                                        for a, b in arcs])
        return groups.h2_schottky_presentation(matrices, basepoint, domains)
    raise ConfigError(f"unknown group kind {kind!r}")


def load_config(path: str) -> ExperimentConfig:
    with open(path, "rb") as fh:
        data = fh.read()
    digest = hashlib.sha256(data).hexdigest()
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}") from exc
    if "seed" not in raw:
        raise ConfigError("a seed is mandatory")
    seed = int(raw["seed"])
    space = _build_space(_require(raw, "space", "root"))

    bp_table = raw.get("basepoints", {})
    basepoints = {}
    for name, literal in bp_table.items():
        basepoints[name] = spaces.point_from_text(space, str(literal))

    presentation = None
    if "group" in raw:
        x0 = basepoints.get("x")
        if x0 is None:
            raise ConfigError("group presentations need basepoint 'x'")
        presentation = _build_presentation(space, raw["group"], x0)

    orbit_tbl = raw.get("orbit", {})
    radius = float(orbit_tbl.get("radius", 8.0))
    budget = int(orbit_tbl.get("budget", 10_000_000))

    part_tbl = raw.get("partition", {})
    resolution = int(part_tbl.get("resolution", 4))

    meas_tbl = raw.get("measure", {})
    s_mode = meas_tbl.get("s_mode", "schedule")
    if s_mode not in ("schedule", "explicit", "offset"):
        raise ConfigError(f"unknown s_mode {s_mode!r}")
    s_value = meas_tbl.get("s_value")
    if s_mode in ("explicit", "offset") and s_value is None:
        raise ConfigError(f"s_mode {s_mode!r} needs s_value")
    mass_floor = float(meas_tbl.get("mass_floor", 1e-6))

    dyn_tbl = dict(raw.get("dynamics", {}))
    dyn = {
        "r": float(dyn_tbl.get("r", 0.5)),
        "t_start": float(dyn_tbl.get("t_start", 6.0)),
        "t_stop": float(dyn_tbl.get("t_stop", 10.0)),
        "t_step": float(dyn_tbl.get("t_step", 0.5)),
        "window": tuple(float(v) for v in dyn_tbl.get("window", (4.0, 8.0))),
        "grid_step": float(dyn_tbl.get("grid_step", 0.05)),
    }

    thresholds = dict(_DEFAULT_THRESHOLDS)
    for key, val in raw.get("thresholds", {}).items():
        if key not in thresholds:
            raise ConfigError(f"unknown threshold {key!r}")
        thresholds[key] = float(val)

    return ExperimentConfig(raw, path, digest, seed, space, presentation,
                            basepoints, radius, budget, resolution, s_mode,
                            s_value, mass_floor, dyn, thresholds)
