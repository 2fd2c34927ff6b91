"""Boundary partitions, Patterson-Sullivan approximants and current weights.

A partition is a finite family of disjoint cells covering the boundary
(equal angle arcs, or all tree cylinders of a fixed depth).  Measures are
built from orbit balls: each non-identity orbit point contributes
exp(-s d(x, g y)) to the cell holding its direction coordinate.  Weights
are reported normalized to unit mass, with the raw normalizer kept as the
total mass so that conformality can be checked on the unnormalized family.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import spaces
from .errors import (DegeneratePairError, ExponentTooSmallError,
                     GeometryError, InsufficientDataError,
                     BoundaryAmbiguityWarning)
from .orbit import OrbitBall
from .spaces import (ArcSet, BoundaryPoint, BoundarySet, CylinderSet,
                     ModelPoint, ModelSpace, TreeSpace, h2, tree)
from .spaces.sets import Arc, make_arc, norm_angle, TWO_PI


@dataclass(frozen=True)
class Cell:
    index: int
    label: str
    bset: BoundarySet
    rep: BoundaryPoint


@dataclass
class BoundaryPartition:
    space: ModelSpace
    resolution: int
    cells: list[Cell]
    _tree_index: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.cells)

    def cell_index(self, b: BoundaryPoint) -> int:
        if spaces.space_kind(self.space) == "tree":
            head = b.head(self.resolution)
            return self._tree_index[head]
        n = len(self.cells)
        theta = norm_angle(b.theta)
        idx = int(theta / TWO_PI * n)
        return min(idx, n - 1)

    def cell_of(self, b: BoundaryPoint) -> Cell:
        return self.cells[self.cell_index(b)]


def build_partition(space: ModelSpace, resolution: int) -> BoundaryPartition:
    if resolution < 1:
        raise GeometryError("partition resolution must be >= 1")
    kind = spaces.space_kind(space)
    cells: list[Cell] = []
    if kind == "tree":
        words = [w for w in tree.reduced_words(space, resolution)
                 if len(w) == resolution]
        words.sort()
        index = {}
        for i, w in enumerate(words):
            rep = tree.end_through(w, w[-1])
            cells.append(Cell(i, w, CylinderSet(space.alphabet, [w]), rep))
            index[w] = i
        bp = BoundaryPartition(space, resolution, cells)
        bp._tree_index = index
        return bp
    n = 2 ** resolution
    for i in range(n):
        lo = TWO_PI * i / n
        hi = TWO_PI * (i + 1) / n
        arc = Arc(lo, hi, True, False)
        mid = arc.midpoint()
        rep = (spaces.H2Boundary(mid) if kind == "h2"
               else spaces.E2Direction(mid))
        cells.append(Cell(i, f"arc{i}", ArcSet([arc]), rep))
    return BoundaryPartition(space, resolution, cells)


def coarsen_weights(bp_fine: BoundaryPartition, weights: np.ndarray,
                    bp_coarse: BoundaryPartition) -> np.ndarray:
    out = np.zeros(len(bp_coarse))
    for cell, w in zip(bp_fine.cells, weights):
        out[bp_coarse.cell_index(cell.rep)] += w
    return out


@dataclass
class DiscreteMeasure:
    basepoint: ModelPoint
    partition: BoundaryPartition
    weights: np.ndarray          # normalized, unit mass
    total_mass: float            # raw normalizer sum exp(-s d)
    s: float

    def max_cell_mass(self) -> float:
        return float(np.max(self.weights)) if len(self.weights) else 0.0


def _directions_and_weights(ball: OrbitBall, x: ModelPoint, s: float,
                            bp: BoundaryPartition
                            ) -> tuple[np.ndarray, float, np.ndarray]:
    space = ball.gp.space
    kind = spaces.space_kind(space)
    weights = np.zeros(len(bp))
    counts = np.zeros(len(bp), dtype=np.int64)
    total = 0.0
    k = bp.resolution
    fast_tree = (kind == "tree" and isinstance(x, tree.TreePoint)
                 and x.letter is None and isinstance(ball.y, tree.TreePoint))
    if fast_tree:
        xw = x.word
        y = ball.y
        y_near = y.word
        y_far = y.word + y.letter if y.letter is not None else None

    def _tree_cell(w: str) -> int:
        """Cell of the direction of g y from the vertex x, string-only."""
        if y_far is None:
            zw = tree.mul_words(w, y_near)
            if zw == xw:
                return -1
            if xw.startswith(zw):
                end = tree.end_through(zw, tree.inv_letter(xw[len(zw)]))
                return bp._tree_index[end.head(k)]
            base, motion = zw, zw[-1]
        else:
            w1 = tree.mul_words(w, y_near)
            w2 = tree.mul_words(w, y_far)
            d1 = tree.dist_vertices(space, xw, w1)
            d2 = tree.dist_vertices(space, xw, w2)
            if d1 < d2:
                far, near = w2, w1
            else:
                far, near = w1, w2
            if len(far) > len(near):
                base, motion = far, far[-1]
            else:
                base, motion = far, tree.inv_letter(near[-1])
        if len(base) >= k and base[-1] != tree.inv_letter(motion):
            return bp._tree_index[base[:k]]
        return bp._tree_index[tree.end_through(base, motion).head(k)]

    for i, w in enumerate(ball.words):
        d = ball.dists[i]
        if not w:
            continue  # the identity entry is excluded
        if fast_tree:
            idx = _tree_cell(w)
            if idx < 0:
                continue
        else:
            p = ball.point(i)
            if p == x:
                continue
            idx = bp.cell_index(spaces.boundary_coordinate(space, x, p))
        term = math.exp(-s * d)
        weights[idx] += term
        counts[idx] += 1
        total += term
    return weights, total, counts


def patterson_sullivan(ball: OrbitBall, x: ModelPoint, s: float,
                       bp: BoundaryPartition,
                       delta_hat: Optional[float] = None) -> DiscreteMeasure:
    if delta_hat is not None and s <= delta_hat:
        raise ExponentTooSmallError(
            f"regularization exponent {s} must exceed the critical exponent "
            f"estimate {delta_hat}")
    weights, total, _ = _directions_and_weights(ball, x, s, bp)
    if total <= 0.0:
        raise InsufficientDataError("orbit ball has no entries beyond identity")
    return DiscreteMeasure(x, bp, weights / total, total, s)


@dataclass(frozen=True)
class LimitSetSample:
    hit_counts: tuple[int, ...]
    radial_flags: tuple[bool, ...]

    def hit_cells(self) -> list[int]:
        return [i for i, c in enumerate(self.hit_counts) if c > 0]


def limit_set_sample(ball: OrbitBall, bp: BoundaryPartition,
                     spacing: float = 1.5, hits_needed: int = 3
                     ) -> LimitSetSample:
    """Cells hit by orbit directions; a cell is flagged radial when hit at
    geometrically spaced radii (each at least `spacing` times the last)."""
    space = ball.gp.space
    x = ball.x
    per_cell: dict[int, list[float]] = {}
    for i in range(len(ball.words)):
        d = float(ball.dists[i])
        if d == 0.0:
            continue
        p = ball.point(i)
        if p == x:
            continue
        idx = bp.cell_index(spaces.boundary_coordinate(space, x, p))
        per_cell.setdefault(idx, []).append(d)
    counts = [0] * len(bp)
    flags = [False] * len(bp)
    for idx, ds in per_cell.items():
        counts[idx] = len(ds)
        ds.sort()
        chain = 1
        last = ds[0] if ds[0] > 0 else 1e-9
        for d in ds[1:]:
            if d >= spacing * last:
                chain += 1
                last = d
                if chain >= hits_needed:
                    flags[idx] = True
                    break
    return LimitSetSample(tuple(counts), tuple(flags))


@dataclass(frozen=True)
class ConformalityReport:
    max_residual: float
    mean_residual: float
    retained_cells: int
    per_cell: tuple[tuple[int, float], ...]


def conformality_residual(ball_x: OrbitBall, ball_x2: OrbitBall, s: float,
                          bp: BoundaryPartition, x: ModelPoint,
                          x2: ModelPoint,
                          mass_floor: float = 1e-6) -> ConformalityReport:
    """Cell-wise defect of d(mu_x)/d(mu_x2) = exp(s B(x2, x)) on the raw
    (unnormalized) measure family."""
    m1 = patterson_sullivan(ball_x, x, s, bp)
    m2 = patterson_sullivan(ball_x2, x2, s, bp)
    space = ball_x.gp.space
    rows: list[tuple[int, float]] = []
    for cell in bp.cells:
        w1 = m1.weights[cell.index]
        w2 = m2.weights[cell.index]
        if w1 < mass_floor or w2 < mass_floor:
            continue
        raw1 = w1 * m1.total_mass
        raw2 = w2 * m2.total_mass
        predicted = s * spaces.busemann(space, cell.rep, x2, x)
        rows.append((cell.index, abs(math.log(raw1 / raw2) - predicted)))
    if not rows:
        raise InsufficientDataError(
            "no cells above the mass floor in both measures")
    residuals = [r for _, r in rows]
    return ConformalityReport(max(residuals),
                              sum(residuals) / len(residuals),
                              len(rows), tuple(rows))


@dataclass(frozen=True)
class SetMass:
    mass: float
    uncertainty: float
    straddling_cells: int


def _cell_probes(space: ModelSpace, cell: Cell) -> list[BoundaryPoint]:
    kind = spaces.space_kind(space)
    if kind == "tree":
        probes = []
        w = cell.label
        for s in space.alphabet:
            if s == tree.inv_letter(w[-1]):
                continue
            probes.append(tree.end_through(w + s, s))
        return probes
    arc = cell.bset.arcs[0]
    eps = arc.span() * 1e-6
    mk = spaces.H2Boundary if kind == "h2" else spaces.E2Direction
    return [mk(arc.lo + eps), mk(arc.hi - eps)]


def measure_against_predicate(dm: DiscreteMeasure, space: ModelSpace,
                              member: Callable[[BoundaryPoint], bool]
                              ) -> SetMass:
    """Sum cell weights by membership of cell midpoints; a cell whose
    probes disagree straddles the boundary and contributes half weight
    plus an uncertainty term."""
    mass = 0.0
    uncertainty = 0.0
    straddling = 0

    def safe(b: BoundaryPoint) -> bool:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryAmbiguityWarning)
            try:
                return member(b)
            except DegeneratePairError:
                return False

    for cell in dm.partition.cells:
        w = dm.weights[cell.index]
        if w == 0.0:
            continue
        votes = [safe(cell.rep)] + [safe(p) for p in _cell_probes(space, cell)]
        if all(votes):
            mass += w
        elif any(votes):
            mass += 0.5 * w
            uncertainty += 0.5 * w
            straddling += 1
    return SetMass(mass, uncertainty, straddling)


def shadow_measure(dm: DiscreteMeasure, space: ModelSpace, r: float,
                   source, y: ModelPoint) -> SetMass:
    """mu(O_r(source, y)) with midpoint assignment and straddle halving."""

    def member(b: BoundaryPoint) -> bool:
        return spaces.shadow_contains(space, r, source, y, b)

    return measure_against_predicate(dm, space, member)


def measure_of_boundary_set(dm: DiscreteMeasure, space: ModelSpace,
                            bset: BoundarySet) -> SetMass:
    return measure_against_predicate(dm, space, bset.contains
                                     if not isinstance(bset, ArcSet)
                                     else lambda b: bset.contains(b.theta))


@dataclass
class CurrentApprox:
    partition: BoundaryPartition
    basepoint: ModelPoint
    delta: float
    weights: dict                          # (i, j) -> weight, i != j
    measure: Optional[DiscreteMeasure] = None

    def total(self) -> float:
        return sum(self.weights.values())


def gromov_current(dm_x: DiscreteMeasure, dm_x_second: DiscreteMeasure,
                   space: ModelSpace, x: ModelPoint, delta: float,
                   bp: BoundaryPartition) -> CurrentApprox:
    """Weights w_i w_j exp(2 delta Gr_x(rep_i, rep_j)) on ordered pairs of
    distinct cells (the diagonal is dropped: the Gromov product diverges
    as the endpoints merge)."""
    if dm_x.partition is not bp or dm_x_second.partition is not bp:
        raise GeometryError("measures must live on the given partition")
    weights: dict = {}
    nz = [c for c in bp.cells if dm_x.weights[c.index] > 0.0
          or dm_x_second.weights[c.index] > 0.0]
    for ci in nz:
        wi = dm_x.weights[ci.index]
        if wi == 0.0:
            continue
        for cj in nz:
            if ci.index == cj.index:
                continue
            wj = dm_x_second.weights[cj.index]
            if wj == 0.0:
                continue
            gr = spaces.gromov_product(space, x, ci.rep, cj.rep)
            weights[(ci.index, cj.index)] = wi * wj * math.exp(2.0 * delta * gr)
    return CurrentApprox(bp, x, delta, weights, dm_x)
