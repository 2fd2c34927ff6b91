"""Finite boundary-set descriptions: circle arcs and tree cylinders.

Set relations (subset, intersection, complement) are evaluated exactly on
the stored descriptions; no sampling is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

TWO_PI = 6.283185307179586476925287

_LETTER_INV = str.maketrans(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ",
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz",
)


def inv_letter(s: str) -> str:
    return s.translate(_LETTER_INV)


def norm_angle(theta: float) -> float:
    t = theta % TWO_PI
    if t < 0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc from ``lo`` to ``hi``.

    Stored with lo in [0, 2pi) and hi in (lo, lo + 2pi].  A span of 2pi is
    the full circle.
    """

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def span(self) -> float:
        return self.hi - self.lo

    def contains(self, theta: float) -> bool:
        if self.span() >= TWO_PI:
            return True
        t = norm_angle(theta)
        if t < self.lo:
            t += TWO_PI
        if t > self.hi:
            return False
        if t == self.lo:
            return self.lo_closed
        if t == self.hi:
            return self.hi_closed
        return self.lo < t < self.hi

    def midpoint(self) -> float:
        return norm_angle(self.lo + 0.5 * self.span())


def make_arc(lo: float, hi: float, lo_closed: bool = False,
             hi_closed: bool = False) -> Arc:
    lo_n = norm_angle(lo)
    width = (hi - lo) % TWO_PI
    if width == 0.0 and hi != lo:
        width = TWO_PI
    return Arc(lo_n, lo_n + width, lo_closed, hi_closed)


class ArcSet:
    """Finite union of circle arcs; disjoint after normalization."""

    kind = "arcs"

    def __init__(self, arcs: Iterable[Arc] = (), full: bool = False):
        self.full = full
        self.arcs: list[Arc] = [] if full else self._normalize(list(arcs))
        if not full and self.arcs and self.arcs[0].span() >= TWO_PI:
            self.full = True
            self.arcs = []

    @staticmethod
    def full_circle() -> "ArcSet":
        return ArcSet(full=True)

    @staticmethod
    def empty() -> "ArcSet":
        return ArcSet()

    @staticmethod
    def _normalize(arcs: list[Arc]) -> list[Arc]:
        pieces: list[Arc] = []
        for a in arcs:
            if a.span() <= 0:
                continue
            if a.span() >= TWO_PI:
                return [Arc(0.0, TWO_PI, True, True)]
            if a.hi <= TWO_PI:
                pieces.append(a)
            else:
                pieces.append(Arc(a.lo, TWO_PI, a.lo_closed, False))
                pieces.append(Arc(0.0, a.hi - TWO_PI, True, a.hi_closed))
        pieces.sort(key=lambda a: (a.lo, a.hi))
        merged: list[Arc] = []
        for a in pieces:
            if merged:
                b = merged[-1]
                touch = a.lo < b.hi or (a.lo == b.hi and (a.lo_closed or b.hi_closed))
                if touch:
                    if a.hi > b.hi:
                        hi, hic = a.hi, a.hi_closed
                    elif a.hi == b.hi:
                        hi, hic = b.hi, (a.hi_closed or b.hi_closed)
                    else:
                        hi, hic = b.hi, b.hi_closed
                    merged[-1] = Arc(b.lo, hi, b.lo_closed, hic)
                    continue
            merged.append(a)
        # stitch pieces meeting across the 0/2pi seam
        if len(merged) >= 2:
            first, last = merged[0], merged[-1]
            if last.hi == TWO_PI and first.lo == 0.0 and \
                    (last.hi_closed or first.lo_closed):
                if last.span() + first.span() >= TWO_PI:
                    return [Arc(0.0, TWO_PI, True, True)]
                merged = merged[1:-1] + [
                    Arc(last.lo, last.hi + first.span(),
                        last.lo_closed, first.hi_closed)]
        return merged

    def contains(self, theta: float) -> bool:
        if self.full:
            return True
        return any(a.contains(theta) for a in self.arcs)

    def is_empty(self) -> bool:
        return not self.full and not self.arcs

    def total_span(self) -> float:
        if self.full:
            return TWO_PI
        return sum(a.span() for a in self.arcs)

    def complement(self) -> "ArcSet":
        if self.full:
            return ArcSet()
        if not self.arcs:
            return ArcSet.full_circle()
        gaps: list[Arc] = []
        n = len(self.arcs)
        for i, a in enumerate(self.arcs):
            b = self.arcs[(i + 1) % n]
            lo, lo_closed = a.hi, not a.hi_closed
            hi_raw = b.lo if i + 1 < n else b.lo + TWO_PI
            width = hi_raw - lo
            if width <= 0:
                if n == 1:
                    width += TWO_PI
                else:
                    continue
            gaps.append(make_arc(norm_angle(lo), norm_angle(lo) + width,
                                 lo_closed, not b.lo_closed))
        return ArcSet(gaps)

    def intersects(self, other: "ArcSet") -> bool:
        if self.is_empty() or other.is_empty():
            return False
        if self.full or other.full:
            return True
        for a in self.arcs:
            for b in other.arcs:
                if _arcs_overlap(a, b):
                    return True
        return False

    def is_subset(self, other: "ArcSet") -> bool:
        if self.is_empty():
            return True
        if other.full:
            return True
        if self.full:
            return False
        return not self.intersects(other.complement())

    def union(self, other: "ArcSet") -> "ArcSet":
        if self.full or other.full:
            return ArcSet.full_circle()
        return ArcSet(self.arcs + other.arcs)

    def intersection(self, other: "ArcSet") -> "ArcSet":
        return self.complement().union(other.complement()).complement()

    def __repr__(self) -> str:
        if self.full:
            return "ArcSet(full)"
        return "ArcSet(%s)" % ", ".join(
            f"{'[' if a.lo_closed else '('}{a.lo:.6g},{a.hi:.6g}"
            f"{']' if a.hi_closed else ')'}" for a in self.arcs)


def _arcs_overlap(a: Arc, b: Arc) -> bool:
    for (lo, hi) in ((b.lo, b.hi), (b.lo + TWO_PI, b.hi + TWO_PI)):
        lo_eff = max(a.lo, lo)
        hi_eff = min(a.hi, hi)
        if lo_eff < hi_eff:
            return True
        if lo_eff == hi_eff:
            lc = a.contains(norm_angle(lo_eff)) and b.contains(norm_angle(lo_eff))
            if lc:
                return True
    return False


def word_is_reduced(word: str) -> bool:
    return all(word[i] != inv_letter(word[i + 1]) for i in range(len(word) - 1))


class CylinderSet:
    """Finite union of tree-end cylinders, each given by a reduced prefix.

    The empty word is the full boundary.  ``alphabet`` lists the single
    letters labelling edges at every vertex (generators and inverses).
    """

    kind = "cylinders"

    def __init__(self, alphabet: Sequence[str], words: Iterable[str] = (),
                 full: bool = False):
        self.alphabet = tuple(alphabet)
        ws = set(words)
        if full or "" in ws:
            self.words: tuple[str, ...] = ("",)
        else:
            self.words = self._normalize(ws)

    @staticmethod
    def _children(alphabet: Sequence[str], word: str) -> list[str]:
        if not word:
            return [s for s in alphabet]
        last = word[-1]
        return [word + s for s in alphabet if s != inv_letter(last)]

    def _normalize(self, words: set[str]) -> tuple[str, ...]:
        for w in words:
            if not word_is_reduced(w):
                raise ValueError(f"cylinder word not reduced: {w!r}")
        # keep minimal prefixes only
        pruned = {w for w in words
                  if not any(v != w and w.startswith(v) for v in words)}
        # promote complete sibling families to their parent, bottom-up
        changed = True
        while changed:
            changed = False
            if "" in pruned:
                return ("",)
            for p in sorted({w[:-1] for w in pruned if w}, key=len, reverse=True):
                kids = self._children(self.alphabet, p)
                if all(k in pruned for k in kids):
                    pruned.difference_update(kids)
                    pruned.add(p)
                    changed = True
                    break
        return tuple(sorted(pruned))

    def is_full(self) -> bool:
        return self.words == ("",)

    def is_empty(self) -> bool:
        return not self.words

    @staticmethod
    def full_boundary(alphabet: Sequence[str]) -> "CylinderSet":
        return CylinderSet(alphabet, full=True)

    @staticmethod
    def empty_set(alphabet: Sequence[str]) -> "CylinderSet":
        return CylinderSet(alphabet)

    def contains(self, end) -> bool:
        if self.is_empty():
            return False
        if self.is_full():
            return True
        maxlen = max(len(w) for w in self.words)
        head = end.head(maxlen)
        return any(head.startswith(w) for w in self.words)

    def contains_word_cylinder(self, word: str) -> bool:
        """Exact test: is cyl(word) a subset of this set?"""
        if self.is_empty():
            return False
        if self.is_full():
            return True
        if any(word == w or word.startswith(w) for w in self.words):
            return True
        maxlen = max(len(w) for w in self.words)
        if len(word) >= maxlen:
            return False
        return all(self.contains_word_cylinder(k)
                   for k in self._children(self.alphabet, word))

    def intersects_word_cylinder(self, word: str) -> bool:
        if self.is_empty():
            return False
        if self.is_full():
            return True
        return any(w.startswith(word) or word.startswith(w) for w in self.words)

    def is_subset(self, other: "CylinderSet") -> bool:
        return all(other.contains_word_cylinder(w) for w in self.words)

    def intersects(self, other: "CylinderSet") -> bool:
        if self.is_empty() or other.is_empty():
            return False
        return any(other.intersects_word_cylinder(w) for w in self.words)

    def complement(self) -> "CylinderSet":
        out: list[str] = []

        def descend(node: str, members: list[str]) -> None:
            if any(m == "" for m in members):
                return
            if not members:
                out.append(node)
                return
            for child in self._children(self.alphabet, node):
                s = child[-1]
                sub = [m[1:] for m in members if m[0] == s]
                descend(child, sub)

        if self.is_full():
            return CylinderSet(self.alphabet)
        descend("", list(self.words))
        return CylinderSet(self.alphabet, out)

    def union(self, other: "CylinderSet") -> "CylinderSet":
        return CylinderSet(self.alphabet, self.words + other.words)

    def intersection_cyl(self, other: "CylinderSet") -> "CylinderSet":
        if self.is_empty() or other.is_empty():
            return CylinderSet(self.alphabet)
        if self.is_full():
            return other
        if other.is_full():
            return self
        words = []
        for a in self.words:
            for b in other.words:
                if a.startswith(b):
                    words.append(a)
                elif b.startswith(a):
                    words.append(b)
        return CylinderSet(self.alphabet, words)

    def __repr__(self) -> str:
        return f"CylinderSet({list(self.words)!r})"
