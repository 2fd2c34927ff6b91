"""Discrete groups acting on the model spaces.

Hyperbolic-plane elements are SL(2,R) matrices stored up to sign and
renormalized after every composition; tree elements are reduced words
acting by left multiplication on the Cayley tree.  Presentations carry a
ping-pong certificate (one boundary domain per generator and inverse)
that is checked exactly on the stored boundary sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from . import spaces
from .errors import (DegeneratePairError, GeometryError, InsufficientDataError,
                     ModelMismatchError, PingPongViolation)
from .spaces import (ArcSet, BoundaryPoint, BoundarySet, CylinderSet,
                     E2Space, GeodesicLine, H2Boundary, H2Point, H2Space,
                     ModelPoint, ModelSpace, TreeEnd, TreePoint, TreeSpace,
                     h2, tree)
from .spaces.sets import inv_letter, make_arc

PARABOLIC_TRACE_BAND = 1e-12


def _token_word_inverse(word: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(inv_letter(s) for s in reversed(word))


def _reduce_tokens(word: tuple[str, ...]) -> tuple[str, ...]:
    out: list[str] = []
    for s in word:
        if out and out[-1] == inv_letter(s):
            out.pop()
        else:
            out.append(s)
    return tuple(out)


@dataclass(frozen=True)
class IsometryElement:
    kind: str                      # "h2" | "tree"
    word: tuple[str, ...]          # generator tokens, freely reduced
    matrix: Optional[h2.Mat] = None
    tword: Optional[str] = None    # tree: the acting reduced word

    def is_identity_word(self) -> bool:
        return not self.word


@dataclass(frozen=True)
class Classification:
    kind: str                      # axial | elliptic | parabolic | identity
    length: Optional[float] = None
    fix_minus: Optional[BoundaryPoint] = None
    fix_plus: Optional[BoundaryPoint] = None


def h2_element(matrix, word: tuple[str, ...] = ()) -> IsometryElement:
    return IsometryElement("h2", _reduce_tokens(word),
                           matrix=h2.mat_normalize(tuple(float(v) for v in matrix)))


def tree_element(word_letters: str, word: tuple[str, ...] = ()) -> IsometryElement:
    tw = tree.reduce_word(word_letters)
    return IsometryElement("tree", _reduce_tokens(word or tuple(tw)), tword=tw)


def identity_element(space: ModelSpace) -> IsometryElement:
    if spaces.space_kind(space) == "h2":
        return IsometryElement("h2", (), matrix=(1.0, 0.0, 0.0, 1.0))
    if spaces.space_kind(space) == "tree":
        return IsometryElement("tree", (), tword="")
    raise GeometryError("the Euclidean plane carries no group action here")


def compose(g: IsometryElement, h: IsometryElement) -> IsometryElement:
    if g.kind != h.kind:
        raise ModelMismatchError("composing isometries of different models")
    word = _reduce_tokens(g.word + h.word)
    if g.kind == "h2":
        return IsometryElement("h2", word, matrix=h2.mat_mul(g.matrix, h.matrix))
    return IsometryElement("tree", word, tword=tree.mul_words(g.tword, h.tword))


def inverse(g: IsometryElement) -> IsometryElement:
    word = _token_word_inverse(g.word)
    if g.kind == "h2":
        return IsometryElement("h2", word, matrix=h2.mat_inv(g.matrix))
    return IsometryElement("tree", word, tword=tree.inv_word(g.tword))


def power(g: IsometryElement, n: int) -> IsometryElement:
    if n < 0:
        return power(inverse(g), -n)
    acc = IsometryElement(g.kind, (), matrix=(1.0, 0.0, 0.0, 1.0)) \
        if g.kind == "h2" else IsometryElement("tree", (), tword="")
    base = g
    while n:
        if n & 1:
            acc = compose(acc, base)
        base = compose(base, base)
        n >>= 1
    return acc


def apply(space: ModelSpace, g: IsometryElement,
          obj: Union[ModelPoint, BoundaryPoint, GeodesicLine]):
    kind = spaces.space_kind(space)
    if kind != g.kind:
        raise ModelMismatchError("isometry does not act on this model")
    if kind == "h2":
        if isinstance(obj, H2Point):
            return H2Point(h2.mobius_point(g.matrix, obj.z))
        if isinstance(obj, H2Boundary):
            return H2Boundary(h2.mobius_angle(g.matrix, obj.theta))
        if isinstance(obj, h2.H2Line):
            return h2.apply_to_line(g.matrix, obj)
        raise ModelMismatchError(f"cannot apply isometry to {obj!r}")
    if isinstance(obj, TreePoint):
        return tree.translate_point(space, g.tword, obj)
    if isinstance(obj, TreeEnd):
        return tree.translate_end(g.tword, obj)
    if isinstance(obj, tree.TreeLine):
        xi = tree.translate_end(g.tword, obj.xi)
        eta = tree.translate_end(g.tword, obj.eta)
        p0 = tree.translate_point(space, g.tword, tree.line_point(space, obj, 0.0))
        return tree.geodesic_through(space, xi, eta, p0)
    raise ModelMismatchError(f"cannot apply isometry to {obj!r}")


def apply_boundary_set(space: ModelSpace, g: IsometryElement,
                       bset: BoundarySet) -> BoundarySet:
    kind = spaces.space_kind(space)
    if kind != g.kind:
        raise ModelMismatchError("isometry does not act on this model")
    if kind == "tree":
        return tree.translate_cylinders(space, g.tword, bset)
    if bset.full:
        return bset
    arcs = []
    for a in bset.arcs:
        lo = h2.mobius_angle(g.matrix, a.lo)
        hi = h2.mobius_angle(g.matrix, a.hi)
        arcs.append(make_arc(lo, hi, a.lo_closed, a.hi_closed))
    return ArcSet(arcs)


# -- classification ------------------------------------------------------------

def classify(space: ModelSpace, g: IsometryElement) -> Classification:
    if spaces.space_kind(space) != g.kind:
        raise ModelMismatchError("isometry does not act on this model")
    if g.kind == "tree":
        return _classify_tree(space, g.tword)
    return _classify_h2(g.matrix)


def _classify_tree(space: TreeSpace, word: str) -> Classification:
    if not word:
        return Classification("identity")
    u, core = "", word
    while len(core) >= 2 and core[0] == inv_letter(core[-1]):
        u += core[0]
        core = core[1:-1]
    if not core:
        # words over a free group cannot fully cancel unless trivial
        return Classification("identity")
    length = space.word_len(core)
    fix_plus = tree.make_end(u, core)
    fix_minus = tree.make_end(u, tree.inv_word(core))
    return Classification("axial", length, fix_minus, fix_plus)


def _classify_h2(m: h2.Mat) -> Classification:
    a, b, c, d = m
    tr = a + d
    if (abs(a - 1.0) <= PARABOLIC_TRACE_BAND and abs(d - 1.0) <= PARABOLIC_TRACE_BAND
            and abs(b) <= PARABOLIC_TRACE_BAND and abs(c) <= PARABOLIC_TRACE_BAND):
        return Classification("identity")
    if abs(abs(tr) - 2.0) <= PARABOLIC_TRACE_BAND:
        return Classification("parabolic")
    if abs(tr) < 2.0:
        return Classification("elliptic")
    length = 2.0 * math.acosh(0.5 * abs(tr))
    disc = math.sqrt(tr * tr - 4.0)
    if c != 0.0:
        # roots of c u^2 + (d - a) u - b = 0, cancellation-free form
        beta = d - a
        q = -0.5 * (beta + math.copysign(disc, beta)) if beta != 0.0 \
            else 0.5 * disc
        u1 = q / c
        u2 = -b / q if q != 0.0 else (a - d) / (2.0 * c)
        # attracting fixed point: |derivative| = (c u + d)^{-2} < 1
        if abs(c * u1 + d) > 1.0:
            att, rep = u1, u2
        else:
            att, rep = u2, u1
    else:
        other = b / (d - a)
        if abs(a) > abs(d):
            att, rep = math.inf, other
        else:
            att, rep = other, math.inf
    return Classification("axial", length,
                          H2Boundary.from_real(rep), H2Boundary.from_real(att))


def north_south_check(space: ModelSpace, g: IsometryElement,
                      xi: BoundaryPoint, n: int) -> BoundaryPoint:
    cls = classify(space, g)
    if cls.kind != "axial":
        raise GeometryError("north-south dynamics needs an axial element")
    if xi == cls.fix_minus:
        raise DegeneratePairError("starting point is the repelling fixed point")
    return apply(space, power(g, n), xi)


# -- presentations -------------------------------------------------------------

@dataclass
class GroupPresentation:
    space: ModelSpace
    gen_names: tuple[str, ...]
    elements: dict          # token -> IsometryElement (generators and inverses)
    domains: dict           # token -> BoundarySet
    basepoint: ModelPoint

    @property
    def tokens(self) -> tuple[str, ...]:
        return self.gen_names + tuple(inv_letter(s) for s in self.gen_names)

    def element_of_word(self, word: str) -> IsometryElement:
        g = identity_element(self.space)
        for s in word:
            g = compose(g, self.elements[s])
        return g


def tree_free_presentation(space: TreeSpace) -> GroupPresentation:
    elements = {}
    domains = {}
    for s in space.alphabet:
        elements[s] = tree_element(s, (s,))
        domains[s] = CylinderSet(space.alphabet, [s])
    return GroupPresentation(space, space.gens, elements, domains,
                             tree.make_vertex(""))


def _inverse_circle_domain(m: h2.Mat) -> ArcSet:
    """Boundary interval inside the isometric circle of the inverse of m
    (center a/c, radius 1/|c|): the element maps the exterior of its own
    circle onto the interior of this one."""
    a, b, c, d = m
    if c == 0.0:
        raise GeometryError("isometric-circle domains need c != 0")
    center = a / c
    radius = 1.0 / abs(c)
    u1, u2 = center - radius, center + radius
    # closed interval: the circle of the inverse is mapped onto itself
    # boundary-to-boundary, so Klein needs the closed disk
    return ArcSet([make_arc(h2.angle_from_real(u1), h2.angle_from_real(u2),
                            lo_closed=True, hi_closed=True)])


def h2_schottky_presentation(matrices: dict, basepoint: H2Point,
                             domains: dict | None = None) -> GroupPresentation:
    gen_names = tuple(sorted(matrices.keys()))
    elements = {}
    for name in gen_names:
        g = h2_element(matrices[name], (name,))
        cls = _classify_h2(g.matrix)
        if cls.kind != "axial":
            raise GeometryError(
                f"generator {name!r} is {cls.kind}; presentations here must "
                f"be purely axial (parabolic-free)")
        elements[name] = g
        elements[inv_letter(name)] = inverse(g)
    if domains is None:
        domains = {}
        for name in gen_names:
            domains[name] = _inverse_circle_domain(elements[name].matrix)
            domains[inv_letter(name)] = _inverse_circle_domain(
                elements[inv_letter(name)].matrix)
    return GroupPresentation(H2Space(), gen_names, elements, domains, basepoint)


@dataclass(frozen=True)
class PingPongResult:
    certified: bool
    witness: Optional[BoundaryPoint] = None
    detail: str = ""


def _sample_of_set(space: ModelSpace, bset: BoundarySet) -> BoundaryPoint:
    if isinstance(bset, ArcSet):
        return H2Boundary(bset.arcs[0].midpoint()) \
            if spaces.space_kind(space) == "h2" else None
    w = bset.words[0]
    if w:
        return tree.end_through(w, w[-1])
    return tree.make_end("", space.gens[0])


def verify_ping_pong(gp: GroupPresentation, samples: int = 64,
                     seed: int = 0, tol: float = 1e-12) -> PingPongResult:
    """Pairwise-disjoint domains (exact) plus the Klein criterion sampled
    on the domain boundaries and at seeded random points of each
    complement.  Membership of mapped boundary samples is accepted up to
    `tol` (circle maps send circle boundaries onto circle boundaries)."""
    toks = gp.tokens
    for i, s in enumerate(toks):
        for t in toks[i + 1:]:
            if gp.domains[s].intersects(gp.domains[t]):
                overlap = _intersection_sample(gp.space, gp.domains[s],
                                               gp.domains[t])
                return PingPongResult(False, overlap,
                                      f"domains of {s!r} and {t!r} overlap")
    kind = spaces.space_kind(gp.space)
    if kind == "tree":
        # cylinder arithmetic is exact; check Klein exactly
        for s in toks:
            outside = gp.domains[inv_letter(s)].complement()
            image = apply_boundary_set(gp.space, gp.elements[s], outside)
            if not image.is_subset(gp.domains[s]):
                leak = _intersection_sample(gp.space, image,
                                            gp.domains[s].complement())
                return PingPongResult(False, leak,
                                      f"image of generator {s!r} leaks its domain")
        return PingPongResult(True)
    import random as _random
    rng = _random.Random(seed)
    for s in toks:
        g = gp.elements[s]
        outside = gp.domains[inv_letter(s)].complement()
        probe_angles: list[float] = []
        for arc in outside.arcs or [make_arc(0.0, spaces.TWO_PI)]:
            probe_angles.append(arc.lo)
            probe_angles.append(arc.hi)
            probe_angles.append(arc.midpoint())
            for _ in range(samples):
                probe_angles.append(arc.lo + rng.random() * arc.span())
        dom = gp.domains[s]
        for theta in probe_angles:
            theta_n = spaces.norm_angle(theta)
            if not outside.contains(theta_n):
                continue  # an endpoint may belong to the closed domain
            image_theta = h2.mobius_angle(g.matrix, theta_n)
            if dom.contains(image_theta):
                continue
            near = any(
                min(abs(image_theta - e) % spaces.TWO_PI,
                    spaces.TWO_PI - abs(image_theta - e) % spaces.TWO_PI) <= tol
                for a in dom.arcs
                for e in (spaces.norm_angle(a.lo), spaces.norm_angle(a.hi)))
            if not near:
                return PingPongResult(
                    False, H2Boundary(theta_n),
                    f"generator {s!r} maps a sampled point outside its domain")
    return PingPongResult(True)


def _intersection_sample(space: ModelSpace, a: BoundarySet,
                         b: BoundarySet) -> Optional[BoundaryPoint]:
    if isinstance(a, ArcSet):
        for arc_a in (a.arcs or [make_arc(0.0, spaces.TWO_PI)]):
            mid = arc_a.midpoint()
            if b.contains(mid):
                return H2Boundary(mid)
        for arc_b in (b.arcs or []):
            if a.contains(arc_b.midpoint()):
                return H2Boundary(arc_b.midpoint())
        return None
    for w in (a.words or ("",)):
        end = tree.end_through(w, w[-1]) if w else tree.make_end("", space.gens[0])
        if b.contains(end):
            return end
    return None


# -- length spectrum and arithmeticity -----------------------------------------

@dataclass(frozen=True)
class LengthSpectrumSample:
    entries: tuple[tuple[str, float], ...]   # (canonical class word, length)
    max_word_len: int

    def lengths(self) -> list[float]:
        return [l for _, l in self.entries]


def _cyclic_canonical(word: str) -> str:
    rotations = [word[i:] + word[:i] for i in range(len(word))]
    return min(rotations)


def length_spectrum(gp: GroupPresentation, max_word_len: int
                    ) -> LengthSpectrumSample:
    toks = gp.tokens
    seen: set[str] = set()
    entries: list[tuple[str, float]] = []
    stack: list[str] = [""]
    while stack:
        w = stack.pop()
        if len(w) < max_word_len:
            for s in toks:
                if w and s == inv_letter(w[-1]):
                    continue
                stack.append(w + s)
        if not w:
            continue
        if len(w) >= 2 and w[0] == inv_letter(w[-1]):
            continue  # not cyclically reduced
        canon = _cyclic_canonical(w)
        if canon in seen:
            continue
        seen.add(canon)
        g = gp.element_of_word(canon)
        cls = classify(gp.space, g)
        if cls.kind != "axial":
            raise GeometryError(
                f"non-axial class {canon!r} in a supposedly free presentation")
        entries.append((canon, cls.length))
    entries.sort()
    return LengthSpectrumSample(tuple(entries), max_word_len)


@dataclass(frozen=True)
class ArithmeticityResult:
    kind: str                      # "arithmetic" | "no_evidence"
    generator: Optional[float]
    confidence: float
    tol: float


def _gcd_real(a: float, b: float, tol: float) -> float:
    a, b = abs(a), abs(b)
    if a < b:
        a, b = b, a
    while b > tol:
        r = math.fmod(a, b)
        r = min(abs(r), abs(b - abs(r)))
        a, b = b, r
    return a


def arithmeticity_test(sample: LengthSpectrumSample,
                       tol: float | None = None) -> ArithmeticityResult:
    lengths = sorted(set(sample.lengths()))
    if len(sample.lengths()) < 2:
        raise InsufficientDataError("need at least two translation lengths")
    if tol is None:
        tol = 1e-6 * max(lengths)
    c = lengths[0]
    for l in lengths[1:]:
        c = _gcd_real(c, l, tol)
        if c <= tol:
            break
    on_grid = all(abs(l - c * round(l / c)) <= tol for l in lengths) if c > 0 else False
    if c > 10.0 * tol and on_grid:
        return ArithmeticityResult("arithmetic", c, c / tol, tol)
    return ArithmeticityResult("no_evidence", None, c / tol, tol)
