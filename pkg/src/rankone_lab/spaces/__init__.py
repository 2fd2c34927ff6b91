"""Model spaces and their shared operation surface.

Three models ship: the hyperbolic plane (upper half-plane coordinates),
Cayley trees of free groups with positive edge lengths, and Euclidean
plane primitives.  Every operation validates that its arguments belong to
the same model and dispatches to the closed-form implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from ..errors import (DegeneratePairError, GeometryError, ModelMismatchError)
from . import e2, h2, tree
from .e2 import E2Direction, E2Line, E2Point
from .h2 import H2Boundary, H2Line, H2Point
from .sets import Arc, ArcSet, CylinderSet, make_arc, norm_angle, TWO_PI
from .tree import TreeEnd, TreeLine, TreePoint, TreeSpace


@dataclass(frozen=True)
class H2Space:
    kind: str = "h2"


@dataclass(frozen=True)
class E2Space:
    kind: str = "e2"


def tree_space(gens, lengths) -> TreeSpace:
    return TreeSpace(tuple(gens), tuple(float(l) for l in lengths))


ModelSpace = Union[H2Space, TreeSpace, E2Space]
ModelPoint = Union[H2Point, TreePoint, E2Point]
BoundaryPoint = Union[H2Boundary, TreeEnd, E2Direction]
GeodesicLine = Union[H2Line, TreeLine, E2Line]
BoundarySet = Union[ArcSet, CylinderSet]


@dataclass(frozen=True)
class HopfCoordinates:
    xi_minus: BoundaryPoint
    xi_plus: BoundaryPoint
    s: float


def space_kind(space: ModelSpace) -> str:
    if isinstance(space, TreeSpace):
        return "tree"
    return space.kind


_POINT_KIND = {H2Point: "h2", TreePoint: "tree", E2Point: "e2"}
_BOUNDARY_KIND = {H2Boundary: "h2", TreeEnd: "tree", E2Direction: "e2"}
_LINE_KIND = {H2Line: "h2", TreeLine: "tree", E2Line: "e2"}


def _check(space: ModelSpace, *objs) -> str:
    kind = space_kind(space)
    for o in objs:
        k = (_POINT_KIND.get(type(o)) or _BOUNDARY_KIND.get(type(o))
             or _LINE_KIND.get(type(o)))
        if k != kind:
            raise ModelMismatchError(
                f"object {o!r} does not belong to model {kind!r}")
    return kind


# -- basic metric operations --------------------------------------------------

def distance(space: ModelSpace, x: ModelPoint, y: ModelPoint) -> float:
    kind = _check(space, x, y)
    if kind == "h2":
        return h2.dist(x.z, y.z)
    if kind == "tree":
        return tree.dist(space, x, y)
    return e2.dist(x, y)


def busemann(space: ModelSpace, xi: BoundaryPoint, x: ModelPoint,
             y: ModelPoint) -> float:
    kind = _check(space, xi, x, y)
    if kind == "h2":
        return h2.busemann(xi.to_real(), x.z, y.z)
    if kind == "tree":
        return tree.busemann(space, xi, x, y)
    return e2.busemann(xi.theta, x, y)


def gromov_product(space: ModelSpace, y: ModelPoint, xi: BoundaryPoint,
                   eta: BoundaryPoint) -> float:
    kind = _check(space, y, xi, eta)
    if kind == "h2":
        if xi == eta:
            raise DegeneratePairError("Gromov product needs distinct endpoints")
        return h2.gromov(y.z, xi.to_real(), eta.to_real())
    if kind == "tree":
        return tree.gromov(space, y, xi, eta)
    return e2.gromov(y, xi.theta, eta.theta)


def cross_ratio(space: ModelSpace, o: ModelPoint, xi: BoundaryPoint,
                xi2: BoundaryPoint, eta: BoundaryPoint,
                eta2: BoundaryPoint) -> float:
    kind = _check(space, o, xi, xi2, eta, eta2)
    for a, b in ((xi, eta), (xi2, eta2), (xi, eta2), (xi2, eta)):
        if a == b:
            raise DegeneratePairError("cross-ratio quadrilateral degenerates")
    if kind == "h2":
        return h2.cross_ratio(o.z, xi.to_real(), xi2.to_real(),
                              eta.to_real(), eta2.to_real())
    if kind == "tree":
        return tree.cross_ratio(space, o, xi, xi2, eta, eta2)
    raise GeometryError("cross-ratio is not supported on the Euclidean plane")


# -- geodesic lines -----------------------------------------------------------

def geodesic_through(space: ModelSpace, xi: BoundaryPoint, eta: BoundaryPoint,
                     x: ModelPoint) -> GeodesicLine:
    kind = _check(space, xi, eta, x)
    if xi == eta:
        raise DegeneratePairError("geodesic needs distinct endpoints")
    if kind == "h2":
        return h2.line_through(xi.to_real(), eta.to_real(), x.z)
    if kind == "tree":
        return tree.geodesic_through(space, xi, eta, x)
    return e2.geodesic_through(xi.theta, eta.theta, x)


def line_point(space: ModelSpace, v: GeodesicLine, t: float) -> ModelPoint:
    kind = _check(space, v)
    if kind == "h2":
        return H2Point(v.point(t))
    if kind == "tree":
        return tree.line_point(space, v, t)
    return e2.line_point(v, t)


def line_endpoints(space: ModelSpace, v: GeodesicLine
                   ) -> tuple[BoundaryPoint, BoundaryPoint]:
    kind = _check(space, v)
    if kind == "h2":
        um, up = v.endpoints()
        return H2Boundary.from_real(um), H2Boundary.from_real(up)
    if kind == "tree":
        return v.xi, v.eta
    return E2Direction(e2.opposite(v.theta)), E2Direction(v.theta)


def flow(v: GeodesicLine, t: float) -> GeodesicLine:
    if isinstance(v, H2Line):
        return h2.flow_line(v, t)
    if isinstance(v, TreeLine):
        return tree.flow_line(v, t)
    if isinstance(v, E2Line):
        return e2.flow_line(v, t)
    raise ModelMismatchError(f"not a geodesic line: {v!r}")


def reverse(v: GeodesicLine) -> GeodesicLine:
    if isinstance(v, H2Line):
        return h2.reverse_line(v)
    if isinstance(v, TreeLine):
        return tree.reverse_line(v)
    if isinstance(v, E2Line):
        return e2.reverse_line(v)
    raise ModelMismatchError(f"not a geodesic line: {v!r}")


def width(space: ModelSpace, v: GeodesicLine) -> float:
    """Diameter of the cross-section of lines sharing both endpoints.

    Zero in both shipped group-action models: the hyperbolic plane has
    unique boundary-joining geodesics and so do trees."""
    kind = _check(space, v)
    if kind == "e2":
        return math.inf
    return 0.0


def hopf_coords(space: ModelSpace, x: ModelPoint, v: GeodesicLine
                ) -> HopfCoordinates:
    _check(space, x, v)
    xi_minus, xi_plus = line_endpoints(space, v)
    origin = line_point(space, v, 0.0)
    s = busemann(space, xi_minus, origin, x)
    return HopfCoordinates(xi_minus, xi_plus, s)


def line_metric_d1(space: ModelSpace, u: GeodesicLine, v: GeodesicLine,
                   samples: int = 257) -> float:
    """sup over t of e^{-|t|} d(u(t), v(t)), evaluated on a grid together
    with the linear-growth tail bound d(u(t),v(t)) <= d(u(0),v(0)) + 2|t|."""
    _check(space, u, v)
    d0 = distance(space, line_point(space, u, 0.0), line_point(space, v, 0.0))
    horizon = max(5.0, 2.0 + d0)
    best = 0.0
    for i in range(samples):
        t = -horizon + (2.0 * horizon) * i / (samples - 1)
        d = distance(space, line_point(space, u, t), line_point(space, v, t))
        best = max(best, math.exp(-abs(t)) * d)
    tail = math.exp(-horizon) * (d0 + 2.0 * horizon)
    return max(best, tail)


# -- shadows, cones, corridors ------------------------------------------------

def shadow_contains(space: ModelSpace, r: float,
                    source: Union[ModelPoint, BoundaryPoint],
                    y: ModelPoint, eta: BoundaryPoint) -> bool:
    if r <= 0:
        raise GeometryError("shadow radius must be positive")
    kind = _check(space, source, y, eta)
    from_boundary = type(source) in _BOUNDARY_KIND
    if kind == "h2":
        if from_boundary:
            return h2.shadow_contains_boundary_source(source.to_real(), y.z,
                                                      r, eta.to_real())
        return h2.shadow_contains_point_source(source.z, y.z, r, eta.to_real())
    if kind == "tree":
        if from_boundary:
            return tree.shadow_contains_boundary_source(space, source, y, r, eta)
        return tree.shadow_contains_point_source(space, source, y, r, eta)
    if from_boundary:
        return e2.shadow_contains_boundary_source(source.theta, y, r, eta.theta)
    return e2.shadow_contains_point_source(source, y, r, eta.theta)


def refined_shadow_contains(space: ModelSpace, r: float, x: ModelPoint,
                            y: ModelPoint, eta: BoundaryPoint,
                            sign: str) -> bool:
    if r <= 0:
        raise GeometryError("shadow radius must be positive")
    if sign not in ("+", "-"):
        raise GeometryError(f"sign must be '+' or '-', got {sign!r}")
    kind = _check(space, x, y, eta)
    if kind == "h2":
        fn = h2.refined_shadow_plus if sign == "+" else h2.refined_shadow_minus
        return fn(x.z, y.z, r, eta.to_real())
    if kind == "tree":
        fn = (tree.refined_shadow_plus if sign == "+"
              else tree.refined_shadow_minus)
        return fn(space, x, y, r, eta)
    fn = e2.refined_shadow_plus if sign == "+" else e2.refined_shadow_minus
    return fn(x, y, r, eta.theta)


def refined_shadow_plus_set(space: ModelSpace, r: float, x: ModelPoint,
                            z: ModelPoint) -> BoundarySet:
    """O^+_r(x, z) as an explicit boundary set."""
    kind = _check(space, x, z)
    if kind == "h2":
        return h2.refined_shadow_plus_arc(x.z, z.z, r)
    if kind == "tree":
        return tree.refined_shadow_plus_cylinders(space, x, z, r)
    return e2.refined_shadow_plus_arcs(x, z, r)


def shadow_set(space: ModelSpace, r: float, x: ModelPoint,
               z: ModelPoint) -> BoundarySet:
    """O_r(x, z) as an explicit boundary set (point source)."""
    kind = _check(space, x, z)
    if kind == "h2":
        return h2.shadow_arc(x.z, z.z, r)
    if kind == "tree":
        return tree.shadow_cylinders(space, x, z, r)
    return e2.shadow_arcs(x, z, r)


def full_boundary(space: ModelSpace) -> BoundarySet:
    if space_kind(space) == "tree":
        return CylinderSet.full_boundary(space.alphabet)
    return ArcSet.full_circle()


def empty_boundary_set(space: ModelSpace) -> BoundarySet:
    if space_kind(space) == "tree":
        return CylinderSet.empty_set(space.alphabet)
    return ArcSet.empty()


def cone_contains(space: ModelSpace, r: float, x: ModelPoint,
                  a_set: BoundarySet, z: ModelPoint, sign: str) -> bool:
    if r <= 0:
        raise GeometryError("cone radius must be positive")
    if sign not in ("+", "-"):
        raise GeometryError(f"sign must be '+' or '-', got {sign!r}")
    _check(space, x, z)
    plus_set = refined_shadow_plus_set(space, r, x, z)
    if sign == "-":
        return plus_set.is_subset(a_set)
    return plus_set.intersects(a_set)


def corridor_contains(space: ModelSpace, r: float, x: ModelPoint,
                      y: ModelPoint, xi: BoundaryPoint,
                      eta: BoundaryPoint) -> bool:
    if r <= 0:
        raise GeometryError("corridor radius must be positive")
    kind = _check(space, x, y, xi, eta)
    if xi == eta:
        raise DegeneratePairError("corridor needs distinct endpoints")
    if kind == "h2":
        return h2.corridor_contains(x.z, y.z, r, xi.to_real(), eta.to_real())
    if kind == "tree":
        return tree.corridor_contains(space, x, y, r, xi, eta)
    return e2.corridor_contains(x, y, r, xi.theta, eta.theta)


def boundary_coordinate(space: ModelSpace, x: ModelPoint,
                        z: ModelPoint) -> BoundaryPoint:
    """Direction coordinate of z seen from x: the endpoint of the ray
    from x through z, canonically extended."""
    kind = _check(space, x, z)
    if kind == "h2":
        return H2Boundary.from_real(h2.forward_endpoint(x.z, z.z))
    if kind == "e2":
        return E2Direction(math.atan2(z.y - x.y, z.x - x.x))
    if z == x:
        raise DegeneratePairError("no direction from a point to itself")
    # tree: continue past z away from x, repeating the arrival letter
    if z.letter is None:
        zw = z.word
        xfull = x.word if x.letter is None else x.word + x.letter
        if xfull.startswith(zw) and len(xfull) > len(zw):
            # z sits on the root side of x
            return tree.end_through(zw, tree.inv_letter(xfull[len(zw)]))
        return tree.end_through(zw, zw[-1])
    w, l = z.word, z.letter
    wl = w + l
    if x.letter is not None and (x.word, x.letter) == (w, l):
        if z.offset > x.offset:
            return tree.end_through(wl, l)
        return tree.end_through(w, tree.inv_letter(l)) if w \
            else tree.make_end("", tree.inv_letter(l))
    d_w = distance(space, x, tree.TreePoint(w))
    d_wl = distance(space, x, tree.TreePoint(wl))
    if d_w < d_wl:
        return tree.end_through(wl, l)
    return tree.end_through(w, tree.inv_letter(l)) if w \
        else tree.make_end("", tree.inv_letter(l))


# -- canonical serialization --------------------------------------------------

def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def point_to_text(space: ModelSpace, p: ModelPoint) -> str:
    kind = _check(space, p)
    if kind == "h2":
        return f"{fmt17(p.z.real)},{fmt17(p.z.imag)}"
    if kind == "e2":
        return f"{fmt17(p.x)},{fmt17(p.y)}"
    if p.letter is None:
        return p.word if p.word else "."
    return f"{p.word if p.word else '.'}:{p.letter}:{fmt17(p.offset)}"


def point_from_text(space: ModelSpace, text: str) -> ModelPoint:
    kind = space_kind(space)
    if kind in ("h2", "e2"):
        parts = text.split(",")
        if len(parts) != 2:
            raise GeometryError(f"bad point literal: {text!r}")
        a, b = float(parts[0]), float(parts[1])
        return H2Point(complex(a, b)) if kind == "h2" else E2Point(a, b)
    parts = text.split(":")
    word = "" if parts[0] == "." else parts[0]
    if len(parts) == 1:
        return tree.make_vertex(word)
    if len(parts) != 3:
        raise GeometryError(f"bad tree point literal: {text!r}")
    return tree.make_point(space, word, parts[1], float(parts[2]))


def boundary_to_text(space: ModelSpace, b: BoundaryPoint) -> str:
    kind = _check(space, b)
    if kind in ("h2", "e2"):
        return fmt17(b.theta)
    return f"{b.prefix if b.prefix else '.'}|{b.period}"


def boundary_from_text(space: ModelSpace, text: str) -> BoundaryPoint:
    kind = space_kind(space)
    if kind == "h2":
        return H2Boundary(float(text))
    if kind == "e2":
        return E2Direction(float(text))
    if "|" not in text:
        raise GeometryError(f"bad tree end literal: {text!r}")
    prefix, period = text.split("|", 1)
    return tree.make_end("" if prefix == "." else prefix, period)
