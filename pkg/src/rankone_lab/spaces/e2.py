"""Euclidean plane primitives.

Shipped only for boundary/shadow experiments: geodesics are straight
lines, the boundary is the circle of directions, and two directions are
joinable by a line exactly when they are opposite.  The plane is never
used as a group-action space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import (DegeneratePairError, strictly_less, weakly_less,
                      BOUNDARY_BAND, flag_ambiguous)
from .sets import Arc, ArcSet, make_arc, norm_angle, TWO_PI

ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class E2Point:
    x: float
    y: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class E2Direction:
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", norm_angle(self.theta))

    def unit(self) -> tuple[float, float]:
        return (math.cos(self.theta), math.sin(self.theta))


@dataclass(frozen=True)
class E2Line:
    """v(t) = anchor + t * unit(theta); endpoints (theta + pi, theta)."""
    anchor: tuple[float, float]
    theta: float


def opposite(theta: float) -> float:
    return norm_angle(theta + math.pi)


def is_opposite(t1: float, t2: float) -> bool:
    d = abs(norm_angle(t1 - t2) - math.pi)
    return d <= ANGLE_TOL


def dist(p: E2Point, q: E2Point) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


def busemann(theta: float, x: E2Point, y: E2Point) -> float:
    ux, uy = math.cos(theta), math.sin(theta)
    return (y.x - x.x) * ux + (y.y - x.y) * uy


def gromov(y: E2Point, t1: float, t2: float) -> float:
    if not is_opposite(t1, t2):
        raise DegeneratePairError("directions not joinable by a line")
    # the union of lines with opposite direction pair covers the plane,
    # so the Busemann half-sum vanishes for every admissible midpoint
    return 0.0


def geodesic_through(t_minus: float, t_plus: float, x: E2Point) -> E2Line:
    if not is_opposite(t_minus, t_plus):
        raise DegeneratePairError("directions not joinable by a line")
    # among the parallel family, the line through x is the closest; anchor
    # at x itself (its own orthogonal projection)
    return E2Line((x.x, x.y), norm_angle(t_plus))


def line_point(line: E2Line, t: float) -> E2Point:
    return E2Point(line.anchor[0] + t * math.cos(line.theta),
                   line.anchor[1] + t * math.sin(line.theta))


def flow_line(line: E2Line, t: float) -> E2Line:
    p = line_point(line, t)
    return E2Line((p.x, p.y), line.theta)


def reverse_line(line: E2Line) -> E2Line:
    return E2Line(line.anchor, opposite(line.theta))


def dist_to_ray(z: E2Point, theta: float, y: E2Point) -> float:
    """Distance from y to the ray from z in direction theta."""
    ux, uy = math.cos(theta), math.sin(theta)
    wx, wy = y.x - z.x, y.y - z.y
    along = wx * ux + wy * uy
    if along >= 0.0:
        return abs(-wx * uy + wy * ux)
    return math.hypot(wx, wy)


def shadow_contains_point_source(x: E2Point, y: E2Point, r: float,
                                 eta: float) -> bool:
    return strictly_less(dist_to_ray(x, eta, y), r, "e2 shadow (point source)")


def shadow_contains_boundary_source(xi: float, y: E2Point, r: float,
                                    eta: float) -> bool:
    """With source a direction, the joined set of lines sweeps the plane,
    so the shadow is exactly the single opposite direction."""
    if abs(norm_angle(xi - eta)) <= ANGLE_TOL:
        raise DegeneratePairError("shadow source equals target direction")
    return is_opposite(xi, eta)


def refined_shadow_plus(x: E2Point, y: E2Point, r: float, eta: float) -> bool:
    d = dist_to_ray(x, eta, y)
    return strictly_less(max(0.0, d - r), r, "e2 refined shadow +")


def refined_shadow_minus(x: E2Point, y: E2Point, r: float, eta: float) -> bool:
    """Worst-case source on the closed ball boundary; equality belongs in."""
    ux, uy = math.cos(eta), math.sin(eta)
    wx, wy = y.x - x.x, y.y - x.y
    along = wx * ux + wy * uy
    perp = -wx * uy + wy * ux
    candidates = []
    if along >= 0.0:
        # widest perpendicular offset, attained with the target still ahead
        candidates.append(abs(perp) + r)
    if along <= -r:
        # the whole source ball lies beyond the target
        candidates.append(math.hypot(wx, wy) + r)
    if along <= r:
        # deepest source with the target behind it
        candidates.append(math.hypot(along - r, perp))
    if abs(along) <= r:
        # rim of the ahead/behind transition cap
        candidates.append(abs(perp) + math.sqrt(max(r * r - along * along, 0.0)))
    m_sup = max(candidates)
    return weakly_less(m_sup, r, "e2 refined shadow -")


def corridor_contains(x: E2Point, y: E2Point, r: float, xi: float,
                      eta: float) -> bool:
    if not is_opposite(xi, eta):
        raise DegeneratePairError("corridor needs a joinable pair")
    ux, uy = math.cos(eta), math.sin(eta)
    x_perp = -x.x * uy + x.y * ux
    y_perp = -y.x * uy + y.y * ux
    x_along = x.x * ux + x.y * uy
    y_along = y.x * ux + y.y * uy
    gap = abs(x_perp - y_perp)
    if not strictly_less(gap, 2.0 * r, "e2 corridor (offset window)"):
        return False
    # choose the offset c in the open feasible window maximizing the slack
    lo = max(x_perp, y_perp) - r
    hi = min(x_perp, y_perp) + r

    def slack(c: float) -> float:
        hx = math.sqrt(max(r * r - (c - x_perp) ** 2, 0.0))
        hy = math.sqrt(max(r * r - (c - y_perp) ** 2, 0.0))
        return (y_along + hy) - (x_along - hx)

    best = max(slack(lo + f * (hi - lo)) for f in
               (0.001, 0.25, 0.5, 0.75, 0.999))
    a, b = lo, hi
    for _ in range(200):
        m1 = a + (b - a) / 3.0
        m2 = b - (b - a) / 3.0
        if slack(m1) < slack(m2):
            a = m1
        else:
            b = m2
    best = max(best, slack(0.5 * (a + b)))
    return strictly_less(-best, 0.0, "e2 corridor (ordering)")


def shadow_arcs(x: E2Point, z: E2Point, r: float) -> ArcSet:
    """O_r(x, z) as an open arc of directions."""
    d = dist(x, z)
    if abs(d - r) <= BOUNDARY_BAND:
        flag_ambiguous(d, r, "e2 shadow arc (source on sphere)")
    if d < r - BOUNDARY_BAND:
        return ArcSet.full_circle()
    theta_c = math.atan2(z.y - x.y, z.x - x.x)
    alpha = math.asin(min(1.0, r / d))
    return ArcSet([make_arc(theta_c - alpha, theta_c + alpha)])


def refined_shadow_plus_arcs(x: E2Point, z: E2Point, r: float) -> ArcSet:
    d = dist(x, z)
    if abs(d - 2.0 * r) <= BOUNDARY_BAND:
        flag_ambiguous(d, 2.0 * r, "e2 refined shadow arc (ball overlap)")
    if d < 2.0 * r - BOUNDARY_BAND:
        return ArcSet.full_circle()
    theta_c = math.atan2(z.y - x.y, z.x - x.x)
    alpha = math.asin(min(1.0, 2.0 * r / d))
    return ArcSet([make_arc(theta_c - alpha, theta_c + alpha)])
