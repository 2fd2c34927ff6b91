"""Cayley trees of free groups with per-generator edge lengths.

Vertices are reduced words over the generators (lowercase letters) and
their inverses (uppercase).  A point is a vertex or an interior point of
an edge; edges are canonically oriented from the shorter word to the
longer.  Ends are eventually periodic reduced letter streams, stored in a
canonical (minimal prefix, primitive period) form so equality is exact.

All metric quantities are finite sums of edge lengths, so the boundary
and shadow combinatorics here are exact up to float addition.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

from ..errors import (DegeneratePairError, GeometryError, strictly_less,
                      flag_ambiguous, BOUNDARY_BAND)
from .sets import CylinderSet, inv_letter, word_is_reduced

SNAP = 1e-12


def reduce_word(word: str) -> str:
    out: list[str] = []
    for s in word:
        if out and out[-1] == inv_letter(s):
            out.pop()
        else:
            out.append(s)
    return "".join(out)


def inv_word(word: str) -> str:
    return "".join(inv_letter(s) for s in reversed(word))


def mul_words(w1: str, w2: str) -> str:
    i = 0
    n1, n2 = len(w1), len(w2)
    while i < min(n1, n2) and w1[n1 - 1 - i] == inv_letter(w2[i]):
        i += 1
    return w1[:n1 - i] + w2[i:]


def lcp(w1: str, w2: str) -> str:
    n = 0
    for a, b in zip(w1, w2):
        if a != b:
            break
        n += 1
    return w1[:n]


@dataclass(frozen=True)
class TreeSpace:
    gens: tuple[str, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        if not self.gens:
            raise GeometryError("tree needs at least one generator")
        for g in self.gens:
            if len(g) != 1 or not g.isalpha() or not g.islower():
                raise GeometryError(f"generator must be a lowercase letter: {g!r}")
        if len(set(self.gens)) != len(self.gens):
            raise GeometryError("duplicate generators")
        if len(self.lengths) != len(self.gens):
            raise GeometryError("one edge length per generator required")
        for l in self.lengths:
            if not (l > 0):
                raise GeometryError(f"edge lengths must be positive: {l}")

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.gens + tuple(inv_letter(g) for g in self.gens)

    def letter_len(self, s: str) -> float:
        return self.lengths[self.gens.index(s.lower())]

    def word_len(self, word: str) -> float:
        return sum(self.letter_len(s) for s in word)

    def is_regular(self) -> bool:
        return len(set(self.lengths)) == 1

    def min_edge(self) -> float:
        return min(self.lengths)


@dataclass(frozen=True)
class TreePoint:
    word: str
    letter: str | None = None
    offset: float = 0.0


def make_vertex(word: str) -> TreePoint:
    if not word_is_reduced(word):
        raise GeometryError(f"vertex word not reduced: {word!r}")
    return TreePoint(word)


def make_point(space: TreeSpace, word: str, letter: str | None = None,
               offset: float = 0.0) -> TreePoint:
    word = reduce_word(word)
    if letter is None:
        return TreePoint(word)
    length = space.letter_len(letter)
    if word and word[-1] == inv_letter(letter):
        # flip to canonical orientation (parent = shorter word)
        return make_point(space, word[:-1], word[-1], length - offset)
    if offset <= SNAP:
        return TreePoint(word)
    if offset >= length - SNAP:
        return TreePoint(word + letter)
    return TreePoint(word, letter, offset)


def _ports(space: TreeSpace, p: TreePoint) -> list[tuple[str, float]]:
    if p.letter is None:
        return [(p.word, 0.0)]
    return [(p.word, p.offset),
            (p.word + p.letter, space.letter_len(p.letter) - p.offset)]


def dist_vertices(space: TreeSpace, w1: str, w2: str) -> float:
    c = lcp(w1, w2)
    return space.word_len(w1[len(c):]) + space.word_len(w2[len(c):])


def dist(space: TreeSpace, p: TreePoint, q: TreePoint) -> float:
    if p.letter is not None and (p.word, p.letter) == (q.word, q.letter):
        return abs(p.offset - q.offset)
    return min(cp + dist_vertices(space, wp, wq) + cq
               for wp, cp in _ports(space, p)
               for wq, cq in _ports(space, q))


# -- ends ---------------------------------------------------------------------

@dataclass(frozen=True)
class TreeEnd:
    prefix: str
    period: str

    def head(self, n: int) -> str:
        if n <= len(self.prefix):
            return self.prefix[:n]
        k = n - len(self.prefix)
        reps = -(-k // len(self.period))
        return self.prefix + (self.period * reps)[:k]

    def letter(self, i: int) -> str:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.period[(i - len(self.prefix)) % len(self.period)]


def _primitive(period: str) -> str:
    n = len(period)
    for d in range(1, n + 1):
        if n % d == 0 and period == period[:d] * (n // d):
            return period[:d]
    return period


def make_end(prefix: str, period: str) -> TreeEnd:
    if not period:
        raise GeometryError("end needs a nonempty repeating part")
    if not word_is_reduced(period) or period[-1] == inv_letter(period[0]):
        raise GeometryError(f"period must be cyclically reduced: {period!r}")
    if not word_is_reduced(prefix):
        prefix = reduce_word(prefix)
    # cancel across the prefix/period junction
    while prefix and prefix[-1] == inv_letter(period[0]):
        prefix = prefix[:-1]
        period = period[1:] + period[0]
    period = _primitive(period)
    # absorb prefix letters that already follow the periodic pattern
    while prefix and prefix[-1] == period[-1]:
        prefix = prefix[:-1]
        period = period[-1] + period[:-1]
    return TreeEnd(prefix, period)


def end_through(word: str, motion: str) -> TreeEnd:
    """The end reached by passing the vertex `word` and then repeating the
    motion letter forever."""
    return make_end(word, motion)


def lcp_word_end(word: str, end: TreeEnd) -> str:
    head = end.head(len(word))
    return lcp(word, head)


def lcp_ends(e1: TreeEnd, e2: TreeEnd) -> str:
    if e1 == e2:
        raise DegeneratePairError("ends coincide")
    cap = len(e1.prefix) + len(e2.prefix) + 2 * len(e1.period) * len(e2.period) + 4
    out = []
    for i in range(cap):
        a, b = e1.letter(i), e2.letter(i)
        if a != b:
            return "".join(out)
        out.append(a)
    raise GeometryError("distinct ends agree beyond the periodicity bound")


# -- Busemann and Gromov ------------------------------------------------------

def _busemann_vertex(space: TreeSpace, u: str, end: TreeEnd) -> float:
    m = lcp_word_end(u, end)
    return space.word_len(u) - 2.0 * space.word_len(m)


def horofunction(space: TreeSpace, end: TreeEnd, p: TreePoint) -> float:
    return min(cost + _busemann_vertex(space, w, end)
               for w, cost in _ports(space, p))


def busemann(space: TreeSpace, end: TreeEnd, x: TreePoint, y: TreePoint) -> float:
    return horofunction(space, end, x) - horofunction(space, end, y)


# -- geodesic lines -----------------------------------------------------------

@dataclass(frozen=True)
class TreeLine:
    xi: TreeEnd
    eta: TreeEnd
    apex: str
    t_apex: float

    def endpoints(self) -> tuple[TreeEnd, TreeEnd]:
        return self.xi, self.eta


def _walk_ray(space: TreeSpace, base: str, end: TreeEnd, distance: float) -> TreePoint:
    """Walk `distance` from the vertex `base` along the ray to `end`.

    `base` must be a prefix of the end's letters."""
    pos = 0.0
    i = len(base)
    word = base
    while True:
        s = end.letter(i)
        length = space.letter_len(s)
        if distance <= pos + length - SNAP:
            return make_point(space, word, s, distance - pos)
        pos += length
        word += s
        i += 1
        if abs(distance - pos) <= SNAP:
            return TreePoint(word)


def line_point(space: TreeSpace, line: TreeLine, t: float) -> TreePoint:
    if t >= line.t_apex:
        return _walk_ray(space, line.apex, line.eta, t - line.t_apex)
    return _walk_ray(space, line.apex, line.xi, line.t_apex - t)


def _project_vertex(space: TreeSpace, xi: TreeEnd, eta: TreeEnd, apex: str,
                    u: str) -> tuple[str, float, float]:
    """(projection word, time relative to apex, distance) for a vertex u."""
    m_eta = lcp_word_end(u, eta)
    if len(m_eta) > len(apex):
        proj = m_eta
        t = space.word_len(proj) - space.word_len(apex)
    else:
        m_xi = lcp_word_end(u, xi)
        if len(m_xi) > len(apex):
            proj = m_xi
            t = -(space.word_len(proj) - space.word_len(apex))
        else:
            proj = apex
            t = 0.0
    return proj, t, dist_vertices(space, u, proj)


def project_to_line(space: TreeSpace, line: TreeLine, p: TreePoint
                    ) -> tuple[float, float]:
    """(distance to the line, time of the nearest line point)."""
    if p.letter is not None:
        w1, w2 = p.word, p.word + p.letter
        _, t1, d1 = _project_vertex(space, line.xi, line.eta, line.apex, w1)
        _, t2, d2 = _project_vertex(space, line.xi, line.eta, line.apex, w2)
        if d1 == 0.0 and d2 == 0.0:
            # the edge lies on the line
            return 0.0, t1 + (p.offset if t2 > t1 else -p.offset)
        # exits through one port
        c1, c2 = p.offset, space.letter_len(p.letter) - p.offset
        if c1 + d1 <= c2 + d2:
            return c1 + d1, t1
        return c2 + d2, t2
    _, t, d = _project_vertex(space, line.xi, line.eta, line.apex, p.word)
    return d, t


def geodesic_through(space: TreeSpace, xi: TreeEnd, eta: TreeEnd,
                     x: TreePoint) -> TreeLine:
    apex = lcp_ends(xi, eta)
    probe = TreeLine(xi, eta, apex, 0.0)
    _, t_rel = project_to_line(space, probe, x)
    return TreeLine(xi, eta, apex, -t_rel)


def line_dist_and_time(space: TreeSpace, line: TreeLine, p: TreePoint
                       ) -> tuple[float, float]:
    d, t_rel = project_to_line(space, line, p)
    return d, t_rel + line.t_apex


def flow_line(line: TreeLine, t: float) -> TreeLine:
    return TreeLine(line.xi, line.eta, line.apex, line.t_apex - t)


def reverse_line(line: TreeLine) -> TreeLine:
    return TreeLine(line.eta, line.xi, line.apex, -line.t_apex)


def gromov(space: TreeSpace, y: TreePoint, xi: TreeEnd, eta: TreeEnd) -> float:
    apex = lcp_ends(xi, eta)
    line = TreeLine(xi, eta, apex, 0.0)
    d, t_rel = project_to_line(space, line, y)
    z = line_point(space, line, t_rel)
    return 0.5 * (busemann(space, xi, y, z) + busemann(space, eta, y, z))


def cross_ratio(space: TreeSpace, o: TreePoint, xi: TreeEnd, xi2: TreeEnd,
                eta: TreeEnd, eta2: TreeEnd) -> float:
    def gr(u: TreeEnd, v: TreeEnd) -> float:
        return gromov(space, o, u, v)

    return gr(xi, eta) + gr(xi2, eta2) - gr(xi, eta2) - gr(xi2, eta)


# -- rays and shadows ---------------------------------------------------------

def _eta_port(space: TreeSpace, p: TreePoint, eta: TreeEnd) -> tuple[str, float, str, float]:
    """(port toward eta, cost, other port, other cost) for an edge point."""
    w1, w2 = p.word, p.word + p.letter
    b1 = _busemann_vertex(space, w1, eta)
    b2 = _busemann_vertex(space, w2, eta)
    c1, c2 = p.offset, space.letter_len(p.letter) - p.offset
    if b2 < b1:
        return w2, c2, w1, c1
    return w1, c1, w2, c2


def _ray_stats_vertex(space: TreeSpace, p: str, eta: TreeEnd, q: str
                      ) -> tuple[float, float]:
    """(distance from q to the ray p->eta, distance from p to the join)."""
    m_pe = lcp_word_end(p, eta)
    m_qe = lcp_word_end(q, eta)
    m_pq = lcp(p, q)
    j = max((m_pe, m_qe, m_pq), key=lambda w: space.word_len(w))
    return dist_vertices(space, q, j), dist_vertices(space, p, j)


def ray_stats(space: TreeSpace, p: TreePoint, eta: TreeEnd, q: TreePoint
              ) -> tuple[float, float]:
    """(b, s): distance from q to the ray from p toward eta, and the
    position along the ray of the join point."""
    if p.letter is not None:
        port, cost, other, other_cost = _eta_port(space, p, eta)
        # candidate 1: q attaches to the ray at or beyond the port
        if q.letter is not None and (q.word, q.letter) == (p.word, p.letter):
            # same edge: the ray covers the part from p toward the port
            delta = q.offset - p.offset
            toward = (port == p.word + p.letter and delta >= 0) or \
                     (port == p.word and delta <= 0)
            if toward:
                return 0.0, abs(delta)
            return abs(delta), 0.0
        b_port, s_port = ray_stats(space, make_vertex(port), eta, q)
        cand1 = (b_port, cost + s_port)
        # candidate 2: q enters the edge from the far side; nearest ray point is p
        d_other = min(cq + dist_vertices(space, wq, other)
                      for wq, cq in _ports(space, q))
        cand2 = (d_other + other_cost, 0.0)
        return cand1 if cand1[0] <= cand2[0] else cand2
    if q.letter is not None:
        w1, w2 = q.word, q.word + q.letter
        length = space.letter_len(q.letter)
        b1, s1 = _ray_stats_vertex(space, p.word, eta, w1)
        b2, s2 = _ray_stats_vertex(space, p.word, eta, w2)
        if b1 == 0.0 and b2 == 0.0:
            # q sits on the ray
            s = s1 + q.offset if s2 > s1 else s2 + (length - q.offset)
            return 0.0, s
        c1, c2 = q.offset, length - q.offset
        if c1 + b1 <= c2 + b2:
            return c1 + b1, s1
        return c2 + b2, s2
    return _ray_stats_vertex(space, p.word, eta, q.word)


def dist_to_ray(space: TreeSpace, p: TreePoint, eta: TreeEnd, q: TreePoint) -> float:
    return ray_stats(space, p, eta, q)[0]


def shadow_contains_point_source(space: TreeSpace, x: TreePoint, y: TreePoint,
                                 r: float, eta: TreeEnd) -> bool:
    return strictly_less(dist_to_ray(space, x, eta, y), r,
                         "tree shadow (point source)")


def shadow_contains_boundary_source(space: TreeSpace, xi: TreeEnd,
                                    y: TreePoint, r: float, eta: TreeEnd) -> bool:
    if xi == eta:
        raise DegeneratePairError("shadow source equals target direction")
    line = geodesic_through(space, xi, eta, y)
    d, _ = project_to_line(space, line, y)
    return strictly_less(d, r, "tree shadow (boundary source)")


def refined_shadow_plus(space: TreeSpace, x: TreePoint, y: TreePoint,
                        r: float, eta: TreeEnd) -> bool:
    b, _ = ray_stats(space, x, eta, y)
    m = min(max(0.0, dist(space, x, y) - r), b)
    return strictly_less(m, r, "tree refined shadow +")


def refined_shadow_minus(space: TreeSpace, x: TreePoint, y: TreePoint,
                         r: float, eta: TreeEnd) -> bool:
    """All sources in the open ball reach the open target ball.

    With b the branch distance of y from the ray x->eta and s the join
    position, the worst sources sit at the eta-side tips; the condition
    reduces to b < r together with b <= s (closed: the tip itself is not
    an admissible source)."""
    b, s = ray_stats(space, x, eta, y)
    if not strictly_less(b, r, "tree refined shadow - (branch)"):
        return False
    if abs(b - s) <= BOUNDARY_BAND:
        flag_ambiguous(b, s, "tree refined shadow - (join)")
        return True
    return b < s


def corridor_contains(space: TreeSpace, x: TreePoint, y: TreePoint, r: float,
                      xi: TreeEnd, eta: TreeEnd) -> bool:
    if xi == eta:
        raise DegeneratePairError("corridor needs distinct endpoints")
    line = geodesic_through(space, xi, eta, x)
    d_x, t_x = line_dist_and_time(space, line, x)
    d_y, t_y = line_dist_and_time(space, line, y)
    if not strictly_less(d_x, r, "tree corridor (first ball)"):
        return False
    if not strictly_less(d_y, r, "tree corridor (second ball)"):
        return False
    gap = (t_y + (r - d_y)) - (t_x - (r - d_x))
    return strictly_less(-gap, 0.0, "tree corridor (ordering)")


# -- shadows as cylinder sets -------------------------------------------------

def _path_vertices_through(space: TreeSpace, x: TreePoint, z: TreePoint
                           ) -> list[tuple[str, float]]:
    """Vertices (word, position from x) along the path from x through z,
    extended through z's edge when z is interior."""
    out: list[tuple[str, float]] = []
    if x.letter is not None and (x.word, x.letter) == (z.word, z.letter):
        # same edge: exit through z's far side
        if z.offset >= x.offset:
            far = z.word + z.letter
            pos = space.letter_len(x.letter) - x.offset
        else:
            far = z.word
            pos = x.offset
        return [(far, pos)]
    xports = _ports(space, x)
    zports = _ports(space, z)
    # choose consistent entry ports: the pair minimizing total distance
    best = min(((cx + dist_vertices(space, wx, wz) + cz, wx, cx, wz)
                for wx, cx in xports for wz, cz in zports),
               key=lambda t: t[0])
    _, wx, cx, wz = best
    c = lcp(wx, wz)
    pos = cx
    up = wx
    out.append((wx, pos))
    while up != c:
        pos += space.letter_len(up[-1])
        up = up[:-1]
        out.append((up, pos))
    down = c
    for s in wz[len(c):]:
        pos += space.letter_len(s)
        down = down + s
        out.append((down, pos))
    if z.letter is not None:
        far = z.word + z.letter if wz == z.word else z.word
        if not out or out[-1][0] != far:
            pos += space.letter_len(z.letter)
            out.append((far, pos))
    return out


def shadow_cylinders(space: TreeSpace, x: TreePoint, z: TreePoint,
                     r: float) -> CylinderSet:
    """O_r(x, z) as an exact union of cylinders (point source)."""
    d = dist(space, x, z)
    if abs(d - r) <= BOUNDARY_BAND:
        flag_ambiguous(d, r, "tree shadow set (source on sphere)")
    if d < r - BOUNDARY_BAND:
        return CylinderSet.full_boundary(space.alphabet)
    t0 = d - r
    x_full = x.word if x.letter is None else x.word + x.letter
    for word, pos in _path_vertices_through(space, x, z):
        if abs(pos - t0) <= BOUNDARY_BAND:
            flag_ambiguous(pos, t0, "tree shadow set (vertex on sphere)")
            continue
        if pos > t0:
            if x_full.startswith(word) and len(word) < len(x_full):
                blocked = x_full[:len(word) + 1]
                return CylinderSet(space.alphabet, [blocked]).complement()
            return CylinderSet(space.alphabet, [word])
    raise GeometryError("no shadow entry vertex found")  # pragma: no cover


def refined_shadow_plus_cylinders(space: TreeSpace, x: TreePoint, z: TreePoint,
                                  r: float) -> CylinderSet:
    d = dist(space, x, z)
    if abs(d - 2.0 * r) <= BOUNDARY_BAND:
        flag_ambiguous(d, 2.0 * r, "tree refined shadow set (ball overlap)")
    if d < 2.0 * r - BOUNDARY_BAND:
        return CylinderSet.full_boundary(space.alphabet)
    return shadow_cylinders(space, x, z, r)


# -- left translation (group action on boundary objects) ----------------------

def translate_point(space: TreeSpace, g: str, p: TreePoint) -> TreePoint:
    if p.letter is None:
        return TreePoint(mul_words(g, p.word))
    return make_point(space, mul_words(g, p.word), p.letter, p.offset)


def translate_end(g: str, end: TreeEnd) -> TreeEnd:
    if not g:
        return end
    reps = (len(g) // len(end.period)) + 2
    prefix_ext = end.prefix + end.period * reps
    return make_end(mul_words(g, prefix_ext), end.period)


def _translate_cylinder(space: TreeSpace, g: str, w: str) -> list[str]:
    if w == "":
        return [""]
    u = mul_words(g, w)
    cancelled = (len(g) + len(w) - len(u)) // 2
    if cancelled < len(w):
        return [u]
    # the prefix is fully swallowed: image is u translated over the
    # admissible one-letter continuations of w
    out: list[str] = []
    for s in space.alphabet:
        if s == inv_letter(w[-1]):
            continue
        out.extend(_translate_cylinder(space, u, s))
    return out


def translate_cylinders(space: TreeSpace, g: str, cs: CylinderSet) -> CylinderSet:
    if cs.is_empty():
        return cs
    words: list[str] = []
    for w in cs.words:
        words.extend(_translate_cylinder(space, g, w))
    return CylinderSet(space.alphabet, words)


# -- enumeration helpers ------------------------------------------------------

def reduced_words(space: TreeSpace, max_len: int) -> Iterable[str]:
    alphabet = space.alphabet
    frontier = [""]
    yield ""
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for s in alphabet:
                if w and s == inv_letter(w[-1]):
                    continue
                nxt.append(w + s)
                yield w + s
        frontier = nxt


