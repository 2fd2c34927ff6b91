"""Upper-half-plane model of the hyperbolic plane.

Points are complex numbers with positive imaginary part.  Boundary points
carry a canonical angle on the Cayley-transform circle, so that the point
at infinity is an ordinary angle (0.0).  Internally most formulas work in
the extended-real coordinate u = -cot(theta/2).

Geodesic lines are stored as an SL(2,R) matrix M with v(t) = M . (i e^t),
so the endpoints are v(-inf) = M(0) and v(+inf) = M(inf), flowing is a
right multiplication by a diagonal matrix, and isometries act by left
multiplication.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from ..errors import (DegeneratePairError, GeometryError, strictly_less,
                      weakly_less, BOUNDARY_BAND, flag_ambiguous)
from .sets import Arc, ArcSet, make_arc, norm_angle, TWO_PI

INF = math.inf

Mat = tuple[float, float, float, float]


@dataclass(frozen=True)
class H2Point:
    z: complex

    def __post_init__(self):
        if not (self.z.imag > 0):
            raise GeometryError(f"upper-half-plane point needs im > 0: {self.z}")


@dataclass(frozen=True)
class H2Boundary:
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", norm_angle(self.theta))

    @staticmethod
    def from_real(u: float) -> "H2Boundary":
        return H2Boundary(angle_from_real(u))

    def to_real(self) -> float:
        return real_from_angle(self.theta)


@dataclass(frozen=True)
class H2Line:
    m: Mat

    def point(self, t: float) -> complex:
        return mobius_point(self.m, complex(0.0, math.exp(t)))

    def endpoints(self) -> tuple[float, float]:
        a, b, c, d = self.m
        return _ratio(b, d), _ratio(a, c)


def _ratio(num: float, den: float) -> float:
    if den == 0.0:
        return INF
    return num / den


# -- boundary coordinate conversions ----------------------------------------

def angle_from_real(u: float) -> float:
    if math.isinf(u):
        return 0.0
    w = complex(u, -1.0) / complex(u, 1.0)
    return norm_angle(math.atan2(w.imag, w.real))


def real_from_angle(theta: float) -> float:
    t = norm_angle(theta)
    if t == 0.0:
        return INF
    return -math.cos(0.5 * t) / math.sin(0.5 * t)


# -- matrices ----------------------------------------------------------------

def _two_prod(a: float, b: float) -> tuple[float, float]:
    """Veltkamp/Dekker error-free product: a*b = p + e exactly."""
    p = a * b
    split = 134217729.0  # 2**27 + 1
    ca = split * a
    ah = ca - (ca - a)
    al = a - ah
    cb = split * b
    bh = cb - (cb - b)
    bl = b - bh
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def det2(m: Mat) -> float:
    """Compensated 2x2 determinant; survives the heavy cancellation of
    long near-unimodular products."""
    a, b, c, d = m
    p1, e1 = _two_prod(a, d)
    p2, e2 = _two_prod(b, c)
    return (p1 - p2) + (e1 - e2)


def mat_normalize(m: Mat) -> Mat:
    a, b, c, d = m
    scale = max(abs(a), abs(b), abs(c), abs(d))
    # beyond this size the determinant of the rounded entries carries an
    # O(1) error, so dividing by it would inject noise; products of
    # normalized matrices drift from det 1 only by accumulated roundoff
    if scale < 1e6:
        det = det2(m)
        if det <= 0:
            raise GeometryError(f"matrix with non-positive determinant: {m}")
        s = 1.0 / math.sqrt(det)
        a, b, c, d = a * s, b * s, c * s, d * s
    for v in (a, b, c, d):
        if v != 0.0:
            if v < 0:
                a, b, c, d = -a, -b, -c, -d
            break
    return (a, b, c, d)


def mat_mul(m1: Mat, m2: Mat) -> Mat:
    a1, b1, c1, d1 = m1
    a2, b2, c2, d2 = m2
    return mat_normalize((a1 * a2 + b1 * c2, a1 * b2 + b1 * d2,
                          c1 * a2 + d1 * c2, c1 * b2 + d1 * d2))


def mat_inv(m: Mat) -> Mat:
    a, b, c, d = m
    return mat_normalize((d, -b, -c, a))


def mobius_point(m: Mat, z: complex) -> complex:
    # the imaginary part is v (ad - bc)/|cz+d|^2; the determinant must be
    # taken compensated or long words lose it to cancellation
    a, b, c, d = m
    u, v = z.real, z.imag
    cu_d = c * u + d
    cv = c * v
    den = cu_d * cu_d + cv * cv
    re = ((a * u + b) * cu_d + a * c * v * v) / den
    im = v * det2(m) / den
    return complex(re, im)


def mobius_real(m: Mat, u: float) -> float:
    a, b, c, d = m
    if math.isinf(u):
        return _ratio(a, c)
    den = c * u + d
    if den == 0.0:
        return INF
    return (a * u + b) / den


def mobius_angle(m: Mat, theta: float) -> float:
    return angle_from_real(mobius_real(m, real_from_angle(theta)))


# -- metric ------------------------------------------------------------------

def dist(z: complex, w: complex) -> float:
    num = abs(z - w) ** 2
    arg = 1.0 + num / (2.0 * z.imag * w.imag)
    return math.acosh(max(1.0, arg))


def busemann(u: float, x: complex, y: complex) -> float:
    """B_u(x, y) = lim ( d(x, s) - d(y, s) ) along a ray toward u."""
    if math.isinf(u):
        return math.log(y.imag) - math.log(x.imag)
    return (math.log(y.imag) - math.log(x.imag)
            + 2.0 * math.log(abs(x - u)) - 2.0 * math.log(abs(y - u)))


def gromov(y: complex, u1: float, u2: float) -> float:
    """Half-sum of Busemann values at a point of the line (u1 u2)."""
    if u1 == u2 or (math.isinf(u1) and math.isinf(u2)):
        raise DegeneratePairError("Gromov product needs distinct endpoints")
    if math.isinf(u1):
        return math.log(abs(y - u2)) - math.log(y.imag)
    if math.isinf(u2):
        return math.log(abs(y - u1)) - math.log(y.imag)
    return (math.log(abs(y - u1)) + math.log(abs(y - u2))
            - math.log(abs(u1 - u2)) - math.log(y.imag))


def cross_ratio(o: complex, xi: float, xi2: float, eta: float, eta2: float) -> float:
    return (gromov(o, xi, eta) + gromov(o, xi2, eta2)
            - gromov(o, xi, eta2) - gromov(o, xi2, eta))


# -- geodesic lines ----------------------------------------------------------

def line_matrix(u_minus: float, u_plus: float) -> Mat:
    """SL(2,R) matrix taking (0, inf) to (u_minus, u_plus)."""
    if u_minus == u_plus or (math.isinf(u_minus) and math.isinf(u_plus)):
        raise DegeneratePairError("geodesic needs distinct endpoints")
    if math.isinf(u_plus):
        return mat_normalize((1.0, u_minus, 0.0, 1.0))
    if math.isinf(u_minus):
        return mat_normalize((u_plus, -1.0, 1.0, 0.0))
    if u_plus > u_minus:
        return mat_normalize((u_plus, u_minus, 1.0, 1.0))
    return mat_normalize((u_plus, -u_minus, 1.0, -1.0))


def line_through(u_minus: float, u_plus: float, x: complex) -> H2Line:
    """Line from u_minus to u_plus anchored so v(0) is the point nearest x."""
    m0 = line_matrix(u_minus, u_plus)
    w = mobius_point(mat_inv(m0), x)
    t0 = math.log(abs(w))
    e = math.exp(0.5 * t0)
    a, b, c, d = m0
    return H2Line(mat_normalize((a * e, b / e, c * e, d / e)))


def flow_line(line: H2Line, t: float) -> H2Line:
    e = math.exp(0.5 * t)
    a, b, c, d = line.m
    return H2Line(mat_normalize((a * e, b / e, c * e, d / e)))


def reverse_line(line: H2Line) -> H2Line:
    a, b, c, d = line.m
    # i e^{-t} = -1/(i e^t): right-multiply by [[0,-1],[1,0]]
    return H2Line(mat_normalize((b, -a, d, -c)))


def apply_to_line(g: Mat, line: H2Line) -> H2Line:
    return H2Line(mat_mul(g, line.m))


def dist_to_line(line: H2Line, z: complex) -> tuple[float, float]:
    """(distance, projection time) from z to the full line."""
    w = mobius_point(mat_inv(line.m), z)
    d = math.acosh(max(1.0, abs(w) / w.imag))
    return d, math.log(abs(w))


# -- rays and shadows ---------------------------------------------------------

def second_endpoint(x: complex, u: float) -> float:
    """Backward endpoint of the geodesic through x with forward endpoint u."""
    if math.isinf(u):
        return x.real
    if x.real == u:
        return INF
    c = (abs(x) ** 2 - u * u) / (2.0 * (x.real - u))
    return 2.0 * c - u


def forward_endpoint(x: complex, z: complex) -> float:
    """Endpoint of the ray from x through z (x != z)."""
    if x.real == z.real:
        return INF if z.imag > x.imag else x.real
    c = (abs(x) ** 2 - abs(z) ** 2) / (2.0 * (x.real - z.real))
    rho = abs(x - c)
    return c + rho if z.real > x.real else c - rho


def dist_to_ray(x: complex, u_eta: float, y: complex) -> float:
    """Distance from y to the geodesic ray from x toward u_eta."""
    u2 = second_endpoint(x, u_eta)
    line = line_through(u2, u_eta, x)
    d_line, t_star = dist_to_line(line, y)
    if t_star >= 0.0:
        return d_line
    return dist(x, y)


def shadow_contains_point_source(x: complex, y: complex, r: float,
                                 u_eta: float) -> bool:
    return strictly_less(dist_to_ray(x, u_eta, y), r, "h2 shadow (point source)")


def shadow_contains_boundary_source(u_xi: float, y: complex, r: float,
                                    u_eta: float) -> bool:
    if u_xi == u_eta:
        raise DegeneratePairError("shadow source equals target direction")
    line = line_through(u_xi, u_eta, y)
    d, _ = dist_to_line(line, y)
    return strictly_less(d, r, "h2 shadow (boundary source)")


def dist_to_vertical_ray(z: complex, u0: float, v0: float) -> float:
    """Distance from z to the vertical ray {u0 + i v : v >= v0}."""
    h = math.hypot(z.real - u0, z.imag)
    if h >= v0:
        return math.acosh(max(1.0, h / z.imag))
    return dist(z, complex(u0, v0))


def _normalize_to_infinity(u_eta: float, *points: complex) -> tuple[complex, ...]:
    if math.isinf(u_eta):
        return points
    n: Mat = (0.0, -1.0, 1.0, -u_eta)
    return tuple(mobius_point(n, z) for z in points)


def refined_shadow_plus(x: complex, y: complex, r: float, u_eta: float) -> bool:
    """Some z in B_r(x) has its ray toward u_eta meeting B_r(y)."""
    x2, y2 = _normalize_to_infinity(u_eta, x, y)
    p, q = x2.real, x2.imag
    a, b = y2.real, y2.imag
    re = q * math.sinh(r)
    cy = q * math.cosh(r)
    # region swept by the upward rays from the closed ball around x2
    if abs(a - p) <= re:
        lower = cy - math.sqrt(max(re * re - (a - p) ** 2, 0.0))
        if b >= lower:
            return strictly_less(0.0, r, "h2 refined shadow +")
    m = min(dist(x2, y2) - r,
            dist_to_vertical_ray(y2, p - re, cy),
            dist_to_vertical_ray(y2, p + re, cy))
    return strictly_less(max(m, 0.0), r, "h2 refined shadow +")


def refined_shadow_minus(x: complex, y: complex, r: float, u_eta: float) -> bool:
    """Every z in B_r(x) has its ray toward u_eta meeting B_r(y).

    Decided by containment of the closed source ball in the closed region
    below the target ball's upper arc; the worst-case source point lies on
    the ball boundary, and the equality locus belongs to the set (rays
    tangent to the open target ball from boundary sources do not matter).
    """
    x2, y2 = _normalize_to_infinity(u_eta, x, y)
    p, q = x2.real, x2.imag
    a, b = y2.real, y2.imag
    re = q * math.sinh(r)
    w = b * math.sinh(r)
    margin_strip = w - (abs(p - a) + re)
    if not weakly_less(-margin_strip, 0.0, "h2 refined shadow - (strip)"):
        return False
    cosh_r = math.cosh(r)

    def phi(u: float) -> float:
        return (b * cosh_r + math.sqrt(max(w * w - (u - a) ** 2, 0.0))
                - q * cosh_r - math.sqrt(max(re * re - (u - p) ** 2, 0.0)))

    lo, hi = p - re, p + re
    if abs(w - re) <= 1e-15 * (w + re):
        candidates = [lo, 0.5 * (lo + hi), hi]
    else:
        u_star = (p * w - a * re) / (w - re)
        candidates = [lo, min(max(u_star, lo), hi), hi]
    margin_arc = min(phi(u) for u in candidates)
    return weakly_less(-margin_arc, 0.0, "h2 refined shadow - (arc)")


def corridor_contains(x: complex, y: complex, r: float, u_xi: float,
                      u_eta: float) -> bool:
    """The line (u_xi, u_eta) passes within r of x, then later within r of y."""
    if u_xi == u_eta or (math.isinf(u_xi) and math.isinf(u_eta)):
        raise DegeneratePairError("corridor needs distinct endpoints")
    line = line_through(u_xi, u_eta, x)
    d_x, t_x = dist_to_line(line, x)  # t_x == 0 by anchoring
    d_y, t_y = dist_to_line(line, y)
    if not strictly_less(d_x, r, "h2 corridor (first ball)"):
        return False
    if not strictly_less(d_y, r, "h2 corridor (second ball)"):
        return False
    cosh_r = math.cosh(r)
    w_x = math.acosh(max(1.0, cosh_r / math.cosh(d_x)))
    w_y = math.acosh(max(1.0, cosh_r / math.cosh(d_y)))
    gap = (t_y + w_y) - (t_x - w_x)
    return strictly_less(-gap, 0.0, "h2 corridor (ordering)")


# -- shadow sets as arcs ------------------------------------------------------

def _frame_at(x: complex, z: complex) -> Mat:
    """Isometry sending x to i and z onto the imaginary axis above i."""
    s = math.sqrt(x.imag)
    p_inv = mat_inv((s, x.real / s, 0.0, 1.0 / s))
    z1 = mobius_point(p_inv, z)
    wdisk = (z1 - 1j) / (z1 + 1j)
    t = -0.5 * cmath.phase(wdisk)
    rot: Mat = (math.cos(t), math.sin(t), -math.sin(t), math.cos(t))
    return mat_mul(rot, p_inv)


def shadow_arc(x: complex, z: complex, r: float) -> ArcSet:
    """O_r(x, z) as an open boundary arc (point source)."""
    d = dist(x, z)
    if d <= r + BOUNDARY_BAND:
        if abs(d - r) <= BOUNDARY_BAND:
            flag_ambiguous(d, r, "h2 shadow arc (source inside ball)")
        return ArcSet.full_circle() if d < r else ArcSet()
    alpha = math.asin(min(1.0, math.sinh(r) / math.sinh(d)))
    t = _frame_at(x, z)
    t_inv = mat_inv(t)
    th1 = angle_from_real(mobius_real(t_inv, real_from_angle(alpha)))
    th2 = angle_from_real(mobius_real(t_inv, real_from_angle(-alpha)))
    th_c = angle_from_real(mobius_real(t_inv, INF))
    a = make_arc(th1, th2)
    if not a.contains(th_c):
        a = make_arc(th2, th1)
    return ArcSet([a])


def boundary_shadow_arc(u_xi: float, z: complex, r: float) -> Arc:
    """{eta : d(z, (xi eta)) < r} as an open arc, in closed form.

    Sending xi to infinity turns the lines into verticals; the vertical at
    u passes within r of w exactly when |u - re w| < im w sinh r.  The
    preimage of that interval is an arc avoiding xi."""
    sh = math.sinh(r)
    if math.isinf(u_xi):
        lo_u = z.real - z.imag * sh
        hi_u = z.real + z.imag * sh
        th1 = angle_from_real(lo_u)
        th2 = angle_from_real(hi_u)
        a = make_arc(th1, th2)
        return a if not a.contains(0.0) else make_arc(th2, th1)
    w = -1.0 / (z - u_xi)
    lo_u = w.real - w.imag * sh
    hi_u = w.real + w.imag * sh
    # pull back through v = xi - 1/u (the inverse of u = -1/(v - xi))
    v1 = u_xi - 1.0 / lo_u if lo_u != 0.0 else INF
    v2 = u_xi - 1.0 / hi_u if hi_u != 0.0 else INF
    th1 = angle_from_real(v1)
    th2 = angle_from_real(v2)
    th_xi = angle_from_real(u_xi)
    a = make_arc(th1, th2)
    return a if not a.contains(th_xi) else make_arc(th2, th1)


def refined_shadow_plus_arc(x: complex, z: complex, r: float,
                            tol: float = 1e-13) -> ArcSet:
    """O^+_r(x, z) as a boundary arc; endpoints located by bisection on the
    closed-form membership predicate."""
    d = dist(x, z)
    if d < 2.0 * r - BOUNDARY_BAND:
        return ArcSet.full_circle()
    if d <= 2.0 * r + BOUNDARY_BAND:
        flag_ambiguous(d, 2.0 * r, "h2 refined shadow arc (ball overlap)")
        return ArcSet.full_circle()

    th_c = angle_from_real(forward_endpoint(x, z))

    def member(theta: float) -> bool:
        return refined_shadow_plus(x, z, r, real_from_angle(theta))

    if not member(th_c):
        return ArcSet()
    if member(norm_angle(th_c + math.pi)):
        return ArcSet.full_circle()

    def edge(sign: float) -> float:
        lo_off, hi_off = 0.0, math.pi
        while hi_off - lo_off > tol:
            mid = 0.5 * (lo_off + hi_off)
            if member(norm_angle(th_c + sign * mid)):
                lo_off = mid
            else:
                hi_off = mid
        return norm_angle(th_c + sign * lo_off)

    return ArcSet([make_arc(edge(-1.0), edge(+1.0))])
