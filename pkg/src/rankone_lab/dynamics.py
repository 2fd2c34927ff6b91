"""Flow-box mass brackets, mixing diagnostics and orbit equidistribution.

Everything here is a finite fold over an orbit ball and a current
approximant: flow-box masses are bracketed through boundary-shadow
integrals, the mixing proxy sums corridor-restricted current mass over a
distance slab of width 6r around the flow time, and the equidistribution
statistic is the exponentially discounted orbit sum of Theorem-B type
test functions evaluated through direction coordinates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import groups, psmeasure, spaces
from .errors import (BoundaryAmbiguityWarning, DegeneratePairError,
                     GeometryError)
from .orbit import CountingCurve, OrbitBall
from .psmeasure import (BoundaryPartition, Cell, CurrentApprox,
                        DiscreteMeasure, measure_against_predicate)
from .spaces import ArcSet, BoundaryPoint, BoundarySet, ModelPoint, ModelSpace


# -- K-set mass brackets -------------------------------------------------------

@dataclass(frozen=True)
class KSetSpec:
    center: ModelPoint
    r: float
    side: str                 # "plus" | "minus"
    boundary_set: BoundarySet

    def __post_init__(self):
        if self.r <= 0:
            raise GeometryError("flow box radius must be positive")
        if self.side not in ("plus", "minus"):
            raise GeometryError("side must be 'plus' or 'minus'")


@dataclass(frozen=True)
class MassBracket:
    lower: float
    upper: float
    integral: float
    uncertainty: float


def k_set_mass_bracket(ca: CurrentApprox, dm: DiscreteMeasure, ks: KSetSpec,
                       space: ModelSpace) -> MassBracket:
    """r * integral_A mu(O_r(xi, center)) dmu(xi) <= m(K) <=
    e^{2 delta r} times the same integral, discretized over cells."""
    if dm.basepoint != ks.center:
        raise GeometryError("measure basepoint must match the flow box center")
    bp = dm.partition
    integral = 0.0
    uncertainty = 0.0

    def member(b: BoundaryPoint) -> bool:
        if isinstance(ks.boundary_set, ArcSet):
            return ks.boundary_set.contains(b.theta)
        return ks.boundary_set.contains(b)

    for cell in bp.cells:
        w = dm.weights[cell.index]
        if w == 0.0:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
            votes = [member(cell.rep)] + \
                [member(p) for p in psmeasure._cell_probes(space, cell)]
        if not any(votes):
            continue
        frac = 1.0 if all(votes) else 0.5
        sm = psmeasure.shadow_measure(dm, space, ks.r, cell.rep, ks.center)
        integral += frac * w * sm.mass
        uncertainty += frac * w * sm.uncertainty + (0.0 if all(votes)
                                                    else 0.5 * w * sm.mass)
    lower = ks.r * integral
    upper = ks.r * math.exp(2.0 * ca.delta * ks.r) * integral
    return MassBracket(lower, upper, integral, ks.r * uncertainty)


# -- corridor-restricted current mass ------------------------------------------

def corridor_current_mass(ca: CurrentApprox, space: ModelSpace, r: float,
                          x: ModelPoint, y: ModelPoint,
                          b_set: BoundarySet, a_set: BoundarySet) -> float:
    """Current mass of pairs (zeta, xi) in B x A whose line runs within r
    of x and later within r of y.  Callers pass g y as y with
    d(x, g y) >= 3r."""
    if spaces.distance(space, x, y) < 3.0 * r:
        raise GeometryError("corridor mass needs d(x, y) >= 3r")
    bp = ca.partition

    def in_set(bset: BoundarySet, b: BoundaryPoint) -> bool:
        if isinstance(bset, ArcSet):
            return bset.contains(b.theta)
        return bset.contains(b)

    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
        for (i, j), w in ca.weights.items():
            zeta = bp.cells[i].rep
            xi = bp.cells[j].rep
            if not in_set(b_set, zeta) or not in_set(a_set, xi):
                continue
            try:
                if spaces.corridor_contains(space, r, x, y, zeta, xi):
                    total += w
            except DegeneratePairError:
                continue
    return total


# -- sub-cell corridor mass (used by the mixing proxy) ---------------------------

def _arc_fraction(cell_arc, section: ArcSet) -> float:
    """|cell ∩ section| / |cell| for circle arcs."""
    if section.full:
        return 1.0
    span = cell_arc.span()
    total = 0.0
    for s in section.arcs:
        s_lo = (s.lo - cell_arc.lo) % spaces.TWO_PI
        s_hi = s_lo + s.span()
        for off in (0.0, -spaces.TWO_PI):
            a = max(0.0, s_lo + off)
            b = min(span, s_hi + off)
            if b > a:
                total += b - a
    return min(1.0, total / span)


def _h2_xi_section(space: ModelSpace, r: float, x: ModelPoint, y: ModelPoint,
                   zeta) -> ArcSet:
    """Forward endpoints xi such that the line (zeta, xi) runs within r of
    x and then of y: the intersection of the two boundary-source shadow
    arcs, with the passage order checked once on the overlap."""
    uz = zeta.to_real()
    arc_x = spaces.h2.boundary_shadow_arc(uz, x.z, r)
    arc_y = spaces.h2.boundary_shadow_arc(uz, y.z, r)
    inter = ArcSet([arc_x]).intersection(ArcSet([arc_y]))
    if inter.is_empty():
        return inter
    probe = spaces.H2Boundary(inter.arcs[0].midpoint())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
        try:
            ok = spaces.corridor_contains(space, r, x, y, zeta, probe)
        except DegeneratePairError:
            ok = False
    return inter if ok else ArcSet.empty()


def _tree_xi_section(space: ModelSpace, r: float, x: ModelPoint,
                     y: ModelPoint, zeta, depth_cap: int = 48):
    """Exact cylinder set of forward endpoints xi with (zeta, xi) in the
    corridor of (x, y).  A cylinder is resolved once all its ends share
    the line prefix past both ball passages."""
    tr = spaces.tree
    out: list[str] = []

    def descend(w: str, depth: int) -> None:
        rep = tr.end_through(w, w[-1])
        inside_zeta = (rep == zeta) or zeta.head(len(w)) == w
        if not inside_zeta:
            apex = tr.lcp_ends(zeta, rep)
            line = tr.TreeLine(zeta, rep, apex, 0.0)
            d_x, t_x = tr.project_to_line(space, line, x)
            d_y, t_y = tr.project_to_line(space, line, y)
            d_w, t_w = tr.project_to_line(space, line, tr.TreePoint(w))
            locked = (d_w == 0.0
                      and t_w >= t_x + max(0.0, r - d_x)
                      and t_w >= t_y + max(0.0, r - d_y))
            if locked or depth >= depth_cap:
                if d_x < r and d_y < r and \
                        (t_y + (r - d_y)) > (t_x - (r - d_x)):
                    out.append(w)
                return
        if depth >= depth_cap:
            return
        for s in space.alphabet:
            if s == tr.inv_letter(w[-1]):
                continue
            descend(w + s, depth + 1)

    for s in space.alphabet:
        descend(s, 1)
    return spaces.CylinderSet(space.alphabet, out)


def _xi_section_set(space: ModelSpace, r: float, x: ModelPoint,
                    y: ModelPoint, zeta) -> BoundarySet:
    if spaces.space_kind(space) == "h2":
        return _h2_xi_section(space, r, x, y, zeta)
    return _tree_xi_section(space, r, x, y, zeta)


def _cell_overlap_fraction(space: ModelSpace, cell: Cell,
                           section: BoundarySet) -> float:
    """Fraction of the cell covered by the section (arc length for circle
    cells, uniform branching share for cylinder cells)."""
    if isinstance(section, ArcSet):
        if section.full:
            return 1.0
        return _arc_fraction(cell.bset.arcs[0], section)
    if section.is_full():
        return 1.0
    beta = len(space.alphabet) - 1
    label = cell.label
    frac = 0.0
    for w in section.words:
        if label.startswith(w):
            return 1.0
        if w.startswith(label):
            frac += beta ** (-(len(w) - len(label)))
    return min(1.0, frac)


def corridor_mass_transfer(ca: CurrentApprox, space: ModelSpace,
                           gp: "groups.GroupPresentation",
                           g: "groups.IsometryElement", r: float,
                           x: ModelPoint, y: ModelPoint,
                           a_set: BoundarySet, b_set: BoundarySet) -> float:
    """Current mass of L_r(x, g y) ∩ (g B x A), evaluated through the
    conformal transfer: the forward section near the g-direction (of size
    ~ e^{-d}) is pulled back by g^{-1} to an O(1) section of the corridor
    (g^{-1} x, y), where the cell measure resolves it; the density picks
    up exp(delta B(x, g^{-1} x)) per cell."""
    if ca.measure is None:
        raise GeometryError("current approximant carries no base measure")
    mu = ca.measure
    bp = ca.partition
    delta = ca.delta
    g_inv = groups.inverse(g)
    gy = groups.apply(space, g, y)
    ginv_x = groups.apply(space, g_inv, x)
    if spaces.distance(space, x, gy) < 3.0 * r:
        raise GeometryError("corridor mass needs d(x, g y) >= 3r")
    eta_dir = spaces.boundary_coordinate(space, x, gy)
    gb = groups.apply_boundary_set(space, g, b_set)
    ginv_a = groups.apply_boundary_set(space, g_inv, a_set)

    def in_set(bset: BoundarySet, b) -> bool:
        if isinstance(bset, ArcSet):
            return bset.contains(b.theta)
        return bset.contains(b)

    # transferred xi-side masses, reused for every source cell via caching
    density = {}
    for c in bp.cells:
        w_c = mu.weights[c.index]
        if w_c > 0.0:
            density[c.index] = w_c * math.exp(
                delta * spaces.busemann(space, c.rep, x, ginv_x))

    total = 0.0
    for cell in bp.cells:
        w_i = mu.weights[cell.index]
        if w_i == 0.0 or not in_set(gb, cell.rep):
            continue
        zeta_p = groups.apply(space, g_inv, cell.rep)
        section = _xi_section_set(space, r, ginv_x, y, zeta_p)
        if section.is_empty():
            continue
        if isinstance(section, ArcSet):
            section = section.intersection(ginv_a) if not ginv_a.full \
                else section
        else:
            section = section.intersection_cyl(ginv_a)
        if section.is_empty():
            continue
        m = 0.0
        for idx, dens in density.items():
            frac = _cell_overlap_fraction(space, bp.cells[idx], section)
            if frac > 0.0:
                m += frac * dens
        if m == 0.0:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
            gr = spaces.gromov_product(space, x, cell.rep, eta_dir)
        total += w_i * math.exp(2.0 * delta * gr) * m
    return total


# -- mixing correlation ----------------------------------------------------------

@dataclass(frozen=True)
class MixingValue:
    t: float
    central: float
    lower: float
    upper: float
    terms: int


def mixing_correlation(ca: CurrentApprox, space: ModelSpace,
                       gp: groups.GroupPresentation, ob: OrbitBall,
                       r: float, x: ModelPoint, y: ModelPoint,
                       a_set: BoundarySet, b_set: BoundarySet,
                       t: float) -> MixingValue:
    """Sum of corridor current masses over the slab |d(x, g y) - t| <= 3r,
    scaled by the slab time width r, with the e^{+-3 delta r} bracket."""
    if t < 6.0 * r:
        raise GeometryError("flow time must be at least 6r")
    if ob.x != x or ob.y != y:
        raise GeometryError("orbit ball basepoints must match (x, y)")
    if t + 3.0 * r > ob.radius + 1e-9:
        raise GeometryError(
            f"slab reaches {t + 3.0 * r:.3f} beyond the enumerated radius")
    central = 0.0
    terms = 0
    lo = t - 3.0 * r
    hi = t + 3.0 * r
    for i in range(len(ob.words)):
        d = float(ob.dists[i])
        if d < lo or d > hi:
            continue
        if d < 3.0 * r:
            continue
        g = gp.element_of_word(ob.words[i])
        central += corridor_mass_transfer(ca, space, gp, g, r, x, y,
                                          a_set, b_set)
        terms += 1
    central *= r
    bracket = math.exp(3.0 * ca.delta * r)
    return MixingValue(t, central, central / bracket, central * bracket, terms)


@dataclass(frozen=True)
class MixingSeries:
    t_grid: tuple[float, ...]
    values: tuple[float, ...]
    trailing_oscillation: float
    spectral_period: float
    spectral_strength: float


def mixing_series(ca: CurrentApprox, space: ModelSpace,
                  gp: groups.GroupPresentation, ob: OrbitBall, r: float,
                  x: ModelPoint, y: ModelPoint, a_set: BoundarySet,
                  b_set: BoundarySet, t_grid: Sequence[float],
                  trailing: int = 5) -> MixingSeries:
    values = [mixing_correlation(ca, space, gp, ob, r, x, y, a_set, b_set,
                                 t).central for t in t_grid]
    tail = values[-trailing:] if len(values) >= trailing else values
    mean_tail = sum(tail) / len(tail)
    osc = ((max(tail) - min(tail)) / mean_tail) if mean_tail > 0 else math.inf
    period, strength = dominant_period(np.asarray(t_grid),
                                       np.asarray(values))
    return MixingSeries(tuple(t_grid), tuple(values), osc, period, strength)


# -- equidistribution statistic ---------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """Continuous test function on pairs of compactified points, driven by
    direction coordinates.  `constant` ignores its arguments; a cell-pair
    hat is the product of two per-cell hat profiles."""
    label: str
    kind: str                                    # "constant" | "cell_pair_hat"
    value: float = 1.0
    partition: Optional[BoundaryPartition] = None
    cell_a: int = -1
    cell_b: int = -1
    smoothing: float = 0.1

    def evaluate(self, dir_p, dir_q) -> float:
        if self.kind == "constant":
            return self.value
        if dir_p is None or dir_q is None:
            return 0.0
        return (_hat(self.partition, self.cell_a, dir_p, self.smoothing)
                * _hat(self.partition, self.cell_b, dir_q, self.smoothing))


def _hat(bp: BoundaryPartition, cell_index: int, b, smoothing: float) -> float:
    cell = bp.cells[cell_index]
    if spaces.space_kind(bp.space) == "tree":
        # tree cells are clopen, so the indicator is already continuous
        return 1.0 if cell.bset.contains(b) else 0.0
    arc = cell.bset.arcs[0]
    span = arc.span()
    w = smoothing * span
    theta = spaces.norm_angle(b.theta)
    lo = arc.lo
    off = (theta - lo) % spaces.TWO_PI
    if off >= span:
        return 0.0
    if off < w:
        return off / w
    if off > span - w:
        return (span - off) / w
    return 1.0


@dataclass(frozen=True)
class EquidistStatistic:
    t_grid: tuple[float, ...]
    labels: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]   # values[f][k] for T = t_grid[k]

    def series(self, label: str) -> tuple[float, ...]:
        return self.values[self.labels.index(label)]


def equidist_statistic(ob: OrbitBall, delta_hat: float,
                       f_list: Sequence[TestFunction],
                       t_grid: Sequence[float]) -> EquidistStatistic:
    """delta * e^{-delta T} * sum_{d(x, g y) <= T} f(g y, g^{-1} x)."""
    if t_grid and max(t_grid) > ob.radius + 1e-9:
        raise GeometryError("grid reaches beyond the enumerated radius")
    needs_dirs = any(f.kind != "constant" for f in f_list)
    n = len(ob.words)
    dirs = [None] * n
    inv_dirs = [None] * n
    if needs_dirs:
        for i in range(n):
            dirs[i] = ob.direction(i)
            inv_dirs[i] = ob.inverse_direction(i)
    fvals = np.zeros((len(f_list), n))
    for j, f in enumerate(f_list):
        if f.kind == "constant":
            fvals[j, :] = f.value
        else:
            for i in range(n):
                fvals[j, i] = f.evaluate(dirs[i], inv_dirs[i])
    order = np.argsort(ob.dists, kind="stable")
    d_sorted = ob.dists[order]
    out = []
    for j in range(len(f_list)):
        series = []
        csum = np.cumsum(fvals[j, order])
        for t in t_grid:
            k = int(np.searchsorted(d_sorted, t + 1e-12, side="right"))
            total = csum[k - 1] if k > 0 else 0.0
            series.append(delta_hat * math.exp(-delta_hat * t) * float(total))
        out.append(tuple(series))
    return EquidistStatistic(tuple(t_grid), tuple(f.label for f in f_list),
                             tuple(out))


# -- counting asymptotics ----------------------------------------------------------

def dominant_period(grid: np.ndarray, values: np.ndarray,
                    p_min: float = 0.2, p_max: Optional[float] = None,
                    p_step: float = 0.005) -> tuple[float, float]:
    """Scan periods for the strongest harmonic of the detrended series;
    returns (period, strength) with strength = peak power / total power."""
    v = values - np.mean(values)
    total = float(np.sum(v * v))
    if total <= 0:
        return math.nan, 0.0
    span = float(grid[-1] - grid[0])
    if p_max is None:
        p_max = span / 2.0
    best_p, best_pow = math.nan, 0.0
    p = p_min
    while p <= p_max + 1e-12:
        phase = 2.0 * math.pi * grid / p
        c = float(np.dot(v, np.cos(phase)))
        s = float(np.dot(v, np.sin(phase)))
        power = c * c + s * s
        if power > best_pow:
            best_pow, best_p = power, p
        p += p_step
    return best_p, best_pow / (total * len(grid) / 2.0)


@dataclass(frozen=True)
class CountingThresholds:
    converge_ratio: float = 1.2
    decay_fraction: float = 0.5
    period_strength: float = 0.2


@dataclass(frozen=True)
class CountingAsymptotic:
    grid: tuple[float, ...]
    values: tuple[float, ...]
    trailing_mean: float
    trailing_min: float
    trailing_max: float
    classification: str
    period: float
    period_strength: float
    thresholds: CountingThresholds


def counting_asymptotic(cc: CountingCurve, delta_hat: float,
                        window: tuple[float, float], grid_step: float = 0.05,
                        thresholds: CountingThresholds = CountingThresholds()
                        ) -> CountingAsymptotic:
    """delta * e^{-delta R} * N(R) on a grid, trailing-window statistics
    and a coarse classification hint."""
    lo, hi = window
    n_steps = int(round((hi - lo) / grid_step))
    grid = np.array([lo + i * grid_step for i in range(n_steps + 1)])
    values = np.array([delta_hat * math.exp(-delta_hat * r) * cc.count(r)
                       for r in grid])
    tail_from = int(math.ceil(0.75 * len(grid)))
    tail = values[tail_from:]
    t_mean = float(np.mean(tail))
    t_min = float(np.min(tail))
    t_max = float(np.max(tail))
    g_mean = float(np.mean(values))
    # the spectral estimate needs several periods: use the trailing half
    half_from = len(grid) // 2
    period, strength = dominant_period(grid[half_from:], values[half_from:])
    if t_mean < thresholds.decay_fraction * g_mean:
        label = "decaying"
    elif t_min > 0 and t_max / t_min < thresholds.converge_ratio:
        label = "converging"
    elif strength >= thresholds.period_strength:
        label = "oscillating-periodic"
    else:
        label = "inconclusive"
    return CountingAsymptotic(tuple(grid), tuple(values), t_mean, t_min,
                              t_max, label, period, strength, thresholds)
