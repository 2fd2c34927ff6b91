"""Orbit-ball enumeration, counting curves and critical-exponent estimates.

The enumeration walks the reduced-word tree of a certified free
presentation breadth-first.  A prefix is pruned as soon as its orbit
point leaves the target radius; this is sound when one-step distance
gains along non-backtracking words are positive, which is audited on a
depth-limited sample before the run and cross-checked against an
unpruned enumeration at small radius.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import groups, spaces
from .errors import (GeometryError, InsufficientDataError,
                     WorkBudgetExceededError)
from .groups import GroupPresentation
from .spaces import ModelPoint, ModelSpace, h2, tree
from .spaces.sets import inv_letter

AUDIT_DEPTH = 6
AUDIT_RADIUS = 6.0


@dataclass
class OrbitBall:
    gp: GroupPresentation
    x: ModelPoint
    y: ModelPoint
    radius: float
    words: list[str]
    dists: np.ndarray
    prune_margin: float

    def __len__(self) -> int:
        return len(self.words)

    def point(self, i: int) -> ModelPoint:
        g = self.gp.element_of_word(self.words[i])
        return groups.apply(self.gp.space, g, self.y)

    def direction(self, i: int):
        """Boundary coordinate of the ray from x through the orbit point,
        None for orbit points equal to x."""
        p = self.point(i)
        if self.dists[i] == 0.0 or p == self.x:
            return None
        return spaces.boundary_coordinate(self.gp.space, self.x, p)

    def inverse_point(self, i: int) -> ModelPoint:
        g = groups.inverse(self.gp.element_of_word(self.words[i]))
        return groups.apply(self.gp.space, g, self.x)

    def inverse_direction(self, i: int):
        p = self.inverse_point(i)
        if p == self.y:
            return None
        return spaces.boundary_coordinate(self.gp.space, self.y, p)

    def sorted_indices(self) -> list[int]:
        return sorted(range(len(self.words)),
                      key=lambda i: (self.dists[i], self.words[i]))


def _orbit_distance(gp: GroupPresentation, x: ModelPoint, word: str,
                    y: ModelPoint) -> float:
    g = gp.element_of_word(word)
    return spaces.distance(gp.space, x, groups.apply(gp.space, g, y))


def _vertex_dist_fn(lens: dict, x_word: str):
    """Distance from the fixed vertex x to a vertex word, string-only."""
    x_tail_cache: dict[int, float] = {}

    def tail_len(k: int) -> float:
        if k not in x_tail_cache:
            x_tail_cache[k] = sum(lens[s] for s in x_word[k:])
        return x_tail_cache[k]

    def d(w: str) -> float:
        n = 0
        m = min(len(x_word), len(w))
        while n < m and x_word[n] == w[n]:
            n += 1
        total = tail_len(n)
        for s in w[n:]:
            total += lens[s]
        return total

    return d


def _audit_min_gain(gp: GroupPresentation, x: ModelPoint, y: ModelPoint,
                    depth: int = AUDIT_DEPTH) -> float:
    """Minimal one-step distance gain along non-backtracking words up to
    the audit depth."""
    toks = gp.tokens
    kind = spaces.space_kind(gp.space)
    min_gain = math.inf
    if kind == "tree":
        frontier = [("", spaces.tree.translate_point(gp.space, "", y))]
        d_of = {"": spaces.distance(gp.space, x, y)}
        for _ in range(depth):
            nxt = []
            for w, _p in frontier:
                for s in toks:
                    if w and s == inv_letter(w[-1]):
                        continue
                    w2 = w + s
                    d2 = spaces.distance(
                        gp.space, x,
                        spaces.tree.translate_point(gp.space, w2, y))
                    min_gain = min(min_gain, d2 - d_of[w])
                    d_of[w2] = d2
                    nxt.append((w2, None))
            frontier = nxt
        return min_gain
    frontier = [("", (1.0, 0.0, 0.0, 1.0))]
    d_of = {"": spaces.distance(gp.space, x, y)}
    for _ in range(depth):
        nxt = []
        for w, m in frontier:
            for s in toks:
                if w and s == inv_letter(w[-1]):
                    continue
                m2 = h2.mat_mul(m, gp.elements[s].matrix)
                w2 = w + s
                d2 = h2.dist(x.z, h2.mobius_point(m2, y.z))
                min_gain = min(min_gain, d2 - d_of[w])
                d_of[w2] = d2
                nxt.append((w2, m2))
        frontier = nxt
    return min_gain


def _reference_basepoint(gp: GroupPresentation) -> ModelPoint:
    if spaces.space_kind(gp.space) == "tree":
        return tree.make_vertex("")
    return spaces.H2Point(1j)


def enumerate_ball(gp: GroupPresentation, x: ModelPoint, y: ModelPoint,
                   radius: float, budget: int = 10_000_000,
                   audit: bool = True) -> OrbitBall:
    """All group elements with d(x, g y) <= radius.

    Pruning is driven by the reference orbit d(ref, w ref) (tree root or
    the point i), whose one-step gains along non-backtracking words are
    audited positive; the triangle inequality then bounds how far the
    (x, y) distance can lag behind the reference distance.
    """
    if radius < 0:
        raise GeometryError("radius must be nonnegative")
    kind = spaces.space_kind(gp.space)
    ref = _reference_basepoint(gp)
    min_gain = _audit_min_gain(gp, ref, ref)
    margin = 0.9 * min_gain
    if margin <= 0:
        raise GeometryError(
            f"pruning audit failed: minimal one-step reference gain "
            f"{min_gain:.6g} is not positive; enumeration cannot be certified")
    offset = (spaces.distance(gp.space, ref, x)
              + spaces.distance(gp.space, ref, y))
    prune_at = radius + offset + 1e-9
    words: list[str] = []
    dists: list[float] = []
    toks = gp.tokens
    count = 0
    depth = 0

    if kind == "tree":
        lens = {s: gp.space.letter_len(s) for s in gp.space.alphabet}
        if isinstance(x, tree.TreePoint) and x.letter is None \
                and isinstance(y, tree.TreePoint) and y.letter is None:
            dist_vertex = _vertex_dist_fn(lens, x.word)
            if y.word:
                dist_fn = lambda w: dist_vertex(tree.mul_words(w, y.word))  # noqa: E731
            else:
                dist_fn = dist_vertex
        elif isinstance(x, tree.TreePoint) and x.letter is None \
                and isinstance(y, tree.TreePoint):
            dist_vertex = _vertex_dist_fn(lens, x.word)
            y_near, y_far = y.word, y.word + y.letter
            c_near, c_far = y.offset, gp.space.letter_len(y.letter) - y.offset

            def dist_fn(w: str) -> float:
                return min(c_near + dist_vertex(tree.mul_words(w, y_near)),
                           c_far + dist_vertex(tree.mul_words(w, y_far)))
        else:
            dist_fn = lambda w: spaces.distance(  # noqa: E731
                gp.space, x, tree.translate_point(gp.space, w, y))
        d0 = spaces.distance(gp.space, x, y)
        if d0 <= radius + 1e-9:
            words.append("")
            dists.append(d0)
        # reference distance of a group word is its letter-length sum
        frontier: list[tuple[str, float]] = [("", 0.0)]
        while frontier:
            depth += 1
            nxt = []
            count += 3 * len(frontier) + 1
            if count > budget:
                raise WorkBudgetExceededError(
                    f"budget {budget} exceeded at depth {depth}",
                    completed_depth=depth - 1, partial_count=len(words))
            for w, dref in frontier:
                last = w[-1] if w else ""
                for s in toks:
                    if last and s == inv_letter(last):
                        continue
                    w2 = w + s
                    dref2 = dref + lens[s]
                    d2 = dist_fn(w2)
                    if d2 <= radius + 1e-9:
                        words.append(w2)
                        dists.append(d2)
                    if dref2 <= prune_at:
                        nxt.append((w2, dref2))
            frontier = nxt
    else:
        zx, zy = x.z, y.z
        frontier_m: list[tuple[str, h2.Mat]] = [("", (1.0, 0.0, 0.0, 1.0))]
        d0 = h2.dist(zx, zy)
        if d0 <= radius + 1e-9:
            words.append("")
            dists.append(d0)
        while frontier_m:
            depth += 1
            nxt = []
            for w, m in frontier_m:
                for s in toks:
                    if w and s == inv_letter(w[-1]):
                        continue
                    m2 = h2.mat_mul(m, gp.elements[s].matrix)
                    w2 = w + s
                    gi = h2.mobius_point(m2, 1j)
                    dref2 = h2.dist(1j, gi)
                    d2 = h2.dist(zx, h2.mobius_point(m2, zy))
                    count += 1
                    if count > budget:
                        raise WorkBudgetExceededError(
                            f"budget {budget} exceeded at depth {depth}",
                            completed_depth=depth - 1,
                            partial_count=len(words))
                    if d2 <= radius + 1e-9:
                        words.append(w2)
                        dists.append(d2)
                    if dref2 <= prune_at:
                        nxt.append((w2, m2))
            frontier_m = nxt

    ball = OrbitBall(gp, x, y, radius, words, np.asarray(dists), margin)
    if audit:
        _completeness_audit(ball)
    order = ball.sorted_indices()
    ball.words = [ball.words[i] for i in order]
    ball.dists = ball.dists[order]
    return ball


def exhaustive_ball_words(gp: GroupPresentation, x: ModelPoint, y: ModelPoint,
                          radius: float, depth: int) -> set[str]:
    """Unpruned enumeration to a fixed word depth (oracle)."""
    out = set()
    toks = gp.tokens
    kind = spaces.space_kind(gp.space)
    if kind == "tree" and isinstance(x, tree.TreePoint) and x.letter is None \
            and isinstance(y, tree.TreePoint) and y.letter is None:
        lens = {s: gp.space.letter_len(s) for s in gp.space.alphabet}
        dist_to_x = _vertex_dist_fn(lens, x.word)
        dist_fn = (lambda w: dist_to_x(tree.mul_words(w, y.word))) if y.word \
            else dist_to_x
    elif kind == "h2":
        mats = {s: gp.elements[s].matrix for s in toks}

        def dist_fn(w: str) -> float:
            m = (1.0, 0.0, 0.0, 1.0)
            for s in w:
                m = h2.mat_mul(m, mats[s])
            return h2.dist(x.z, h2.mobius_point(m, y.z))
    else:
        dist_fn = lambda w: _orbit_distance(gp, x, w, y)  # noqa: E731
    stack = [""]
    while stack:
        w = stack.pop()
        if dist_fn(w) <= radius + 1e-9:
            out.add(w)
        if len(w) < depth:
            for s in toks:
                if w and s == inv_letter(w[-1]):
                    continue
                stack.append(w + s)
    return out


def _completeness_audit(ball: OrbitBall) -> None:
    # keep the unpruned oracle around half a million nodes
    k = len(ball.gp.tokens)
    depth = AUDIT_DEPTH + 4
    while depth > 4 and k * (k - 1) ** (depth - 1) > 500_000:
        depth -= 1
    r_audit = min(ball.radius, AUDIT_RADIUS)
    oracle = exhaustive_ball_words(ball.gp, ball.x, ball.y, r_audit, depth)
    mine = {w for w, d in zip(ball.words, ball.dists) if d <= r_audit + 1e-9}
    missing = oracle - mine
    if missing:
        raise GeometryError(
            f"completeness audit failed at radius {r_audit}: "
            f"{len(missing)} elements missing, e.g. {sorted(missing)[:3]}")


@dataclass
class CountingCurve:
    sorted_dists: np.ndarray

    def count(self, radius: float) -> int:
        return int(bisect_right(self.sorted_dists, radius))

    def jump_points(self, lo: float = -math.inf, hi: float = math.inf
                    ) -> np.ndarray:
        d = self.sorted_dists
        u = np.unique(d)
        return u[(u >= lo) & (u <= hi)]


def counting_curve(ball: OrbitBall) -> CountingCurve:
    return CountingCurve(np.sort(ball.dists))


def poincare_partial(ball: OrbitBall, s: float,
                     radius: float | None = None) -> float:
    """Partial Poincare sum over the ball, added in ascending distance
    order for numerical stability."""
    d = np.sort(ball.dists)
    if radius is not None:
        d = d[d <= radius + 1e-12]
    return float(np.sum(np.exp(-s * d)))


@dataclass(frozen=True)
class CriticalExponentEstimate:
    delta_hat: float
    method: str
    window: tuple[float, float]
    residual: float
    root_test: float
    disagreement: bool


def _root_test_value(cc: CountingCurve, r_max: float, width: float = 2.0,
                     lo: float = 1e-4, hi: float = 8.0) -> float:
    """Bisection for the exponent where successive shell sums balance."""
    d = cc.sorted_dists
    shell1 = d[(d > 0.5 * r_max - width) & (d <= 0.5 * r_max)]
    shell2 = d[(d > r_max - width) & (d <= r_max)]
    if len(shell1) == 0 or len(shell2) == 0:
        return math.nan

    def h(s: float) -> float:
        return (math.log(np.sum(np.exp(-s * shell2)))
                - math.log(np.sum(np.exp(-s * shell1))))

    if h(lo) < 0:
        return lo
    if h(hi) > 0:
        return hi
    a, b = lo, hi
    for _ in range(80):
        mid = 0.5 * (a + b)
        if h(mid) > 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def estimate_delta(cc: CountingCurve, window: tuple[float, float]
                   ) -> CriticalExponentEstimate:
    lo, hi = window
    if hi - lo < 4.0:
        raise InsufficientDataError("estimation window must span at least 4")
    jumps = cc.jump_points(lo, hi)
    if len(jumps) < 8:
        raise InsufficientDataError(
            f"only {len(jumps)} jump points inside the window; need >= 8")
    xs = jumps
    ys = np.array([math.log(cc.count(r)) for r in jumps])
    slope, intercept = np.polyfit(xs, ys, 1)
    residual = float(np.max(np.abs(ys - (slope * xs + intercept))))
    root = _root_test_value(cc, hi)
    disagreement = (not math.isnan(root)) and abs(root - slope) > 0.05
    return CriticalExponentEstimate(float(slope), "log-count-slope",
                                    (lo, hi), residual, float(root),
                                    disagreement)


@dataclass(frozen=True)
class DivergenceReport:
    s: float
    radii: tuple[float, ...]
    partial_sums: tuple[float, ...]
    increments: tuple[float, ...]
    evidence: bool
    tail_ratio: float


def divergence_diagnostic(ball: OrbitBall, delta_hat: float,
                          step: float = 1.0,
                          evidence_ratio: float = 0.25) -> DivergenceReport:
    """Partial sums of the Poincare series at s = delta_hat over growing
    radii; steadily non-vanishing increments are divergence evidence."""
    r_max = ball.radius
    radii = [step * k for k in range(1, int(r_max / step) + 1)]
    d = np.sort(ball.dists)
    partials = [float(np.sum(np.exp(-delta_hat * d[d <= r + 1e-12])))
                for r in radii]
    increments = [partials[0]] + [b - a for a, b in zip(partials, partials[1:])]
    if len(increments) >= 2:
        tail = increments[-1]
        peak = max(increments)
        ratio = tail / peak if peak > 0 else 0.0
    else:
        ratio = 0.0
    return DivergenceReport(delta_hat, tuple(radii), tuple(partials),
                            tuple(increments), ratio >= evidence_ratio,
                            ratio)
