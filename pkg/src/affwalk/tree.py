"""The homogeneous tree T_{q+1} with a distinguished end, as a ball tree.

Vertices are pairs (level k, residue): the set of digit series agreeing with
``residue`` strictly below index k.  The distinguished end ``omega`` is the
end of strictly decreasing levels; levels increase away from it, and the
Busemann value of a vertex is its level.  The other ends are eventually
periodic digit streams, bounded below, infinite upward.

Orientation convention (fixed here, used by every other module): the parent
of a vertex sits one level down (toward omega), its q children one level up.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

from .digits import (
    Digits,
    ModulusMismatchError,
    format_digits,
    parse_digits,
    truncate_below,
    valuation,
    zero,
)


@dataclass(frozen=True)
class Vertex:
    """Ball at ``level`` whose members agree with ``residue`` below ``level``."""

    q: int
    level: int
    residue: Digits

    def __post_init__(self):
        if self.residue.q != self.q:
            raise ModulusMismatchError("residue modulus differs from vertex modulus")
        if truncate_below(self.residue, self.level) != self.residue:
            raise ValueError("residue must be supported strictly below the level")

    def __str__(self) -> str:
        body = ",".join(f"{i}:{d}" for i, d in self.residue.entries)
        return f"{self.q}:({self.level}; {{{body}}})"


def root(q: int) -> Vertex:
    return Vertex(q, 0, zero(q))


def parse_vertex(text: str) -> Vertex:
    s = text.strip()
    head, _, rest = s.partition(":")
    q = int(head)
    rest = rest.strip()
    if not (rest.startswith("(") and rest.endswith(")")):
        raise ValueError(f"bad vertex literal {text!r}")
    level_s, _, digits_s = rest[1:-1].partition(";")
    res = parse_digits(f"{q}:{digits_s.strip()}")
    return Vertex(q, int(level_s), res)


@dataclass(frozen=True)
class End:
    """The distinguished end (``stream is None``) or an eventually periodic
    digit stream: digits below ``period_start`` come from ``pre``, the digit
    at index i >= period_start is ``word[(i - period_start) % len(word)]``.

    Normal form: minimal period word, period pulled as far down as possible;
    a stream with all digits eventually zero has word ``(0,)``.
    """

    q: int
    pre: Digits | None
    period_start: int | None
    word: tuple[int, ...] | None

    @property
    def is_omega(self) -> bool:
        return self.word is None

    def digit(self, idx: int) -> int:
        if self.is_omega:
            raise ValueError("omega has no digit stream")
        if idx >= self.period_start:
            return self.word[(idx - self.period_start) % len(self.word)]
        return self.pre.digit(idx)

    def lowest_nonzero(self) -> int | float:
        """Smallest index carrying a nonzero digit; +inf for the zero stream."""
        if self.is_omega:
            raise ValueError("omega has no digit stream")
        if not self.pre.is_zero():
            return valuation(self.pre)
        for j in range(len(self.word)):
            if self.word[j]:
                return self.period_start + j
        return math.inf

    def prefix(self, k: int) -> Digits:
        """The digits below index k, as a finite value."""
        if self.is_omega:
            raise ValueError("omega has no digit stream")
        acc = {i: d for i, d in self.pre.entries if i < k}
        for i in range(self.period_start, k):
            d = self.word[(i - self.period_start) % len(self.word)]
            if d:
                acc[i] = d
        return Digits.from_map(self.q, acc)

    def __str__(self) -> str:
        if self.is_omega:
            return f"{self.q}:omega"
        pre_body = ",".join(f"{i}:{d}" for i, d in self.pre.entries)
        word_body = ",".join(str(d) for d in self.word)
        return f"{self.q}:stream(pre={{{pre_body}}}, p={self.period_start}, period=[{word_body}])"


def omega(q: int) -> End:
    return End(q, None, None, None)


def make_end(q: int, pre: Digits | dict, period_start: int, word: tuple[int, ...]) -> End:
    """Normalize (pre, period_start, word) into the canonical stream end."""
    if isinstance(pre, Digits):
        pre_map = pre.to_dict()
    else:
        pre_map = {i: d % q for i, d in pre.items() if d % q}
    if any(i >= period_start for i in pre_map):
        raise ValueError("pre digits must sit below the period start")
    if len(word) < 1:
        raise ValueError("period word must be non-empty")
    word = tuple(d % q for d in word)

    # minimal period of the tail
    for div in range(1, len(word) + 1):
        if len(word) % div == 0 and all(word[i] == word[i % div] for i in range(len(word))):
            word = word[:div]
            break

    p = period_start
    if all(d == 0 for d in word):
        word = (0,)
        p = max(pre_map) + 1 if pre_map else 0
    else:
        # absorb: while the digit just below the period equals the one the
        # period would put there, extend the period downward
        while pre_map.get(p - 1, 0) == word[-1]:
            word = (word[-1],) + word[:-1]
            p -= 1
            pre_map.pop(p, None)
    pre_digits = Digits.from_map(q, {i: d for i, d in pre_map.items() if i < p})
    return End(q, pre_digits, p, word)


def end_from_digits(b: Digits) -> End:
    """The end whose stream is the finite value b padded with zeros upward."""
    return make_end(b.q, b, (max(b.support()) + 1) if b.entries else 0, (0,))


def parse_end(text: str) -> End:
    s = text.strip()
    head, _, rest = s.partition(":")
    q = int(head)
    rest = rest.strip()
    if rest == "omega":
        return omega(q)
    if not (rest.startswith("stream(") and rest.endswith(")")):
        raise ValueError(f"bad end literal {text!r}")
    inner = rest[len("stream("):-1]
    pre_part, _, tail = inner.partition("}")
    pre_body = pre_part.split("{", 1)[1]
    pre = parse_digits(f"{q}:{{{pre_body}}}")
    fields = dict(
        kv.strip().split("=", 1)
        for kv in tail.lstrip(", ").replace("period=", "period=", 1).split(", ")
        if kv.strip()
    )
    p = int(fields["p"])
    word_body = fields["period"].strip()
    if not (word_body.startswith("[") and word_body.endswith("]")):
        raise ValueError(f"bad end literal {text!r}")
    inner_word = word_body[1:-1].strip()
    word = tuple(int(x) for x in inner_word.split(",")) if inner_word else ()
    return make_end(q, pre, p, word)


Point = Union[Vertex, End]

BoundaryPoint = tuple  # tuple of End, one per factor


def parent(v: Vertex) -> Vertex:
    """The unique neighbor toward omega."""
    return Vertex(v.q, v.level - 1, truncate_below(v.residue, v.level - 1))


def children(v: Vertex) -> list[Vertex]:
    """The q vertices one level up, one per digit at index ``level``."""
    out = []
    for d in range(v.q):
        res = Digits.from_map(v.q, [*v.residue.entries, (v.level, d)])
        out.append(Vertex(v.q, v.level + 1, res))
    return out


def _first_disagreement(a: Digits, b: Digits) -> int | float:
    """Smallest index where the two digit values differ; +inf if equal."""
    ai, bi = dict(a.entries), dict(b.entries)
    for i in sorted(set(ai) | set(bi)):
        if ai.get(i, 0) != bi.get(i, 0):
            return i
    return math.inf


def distance(u: Vertex, v: Vertex) -> int:
    if u.q != v.q:
        raise ModulusMismatchError("vertices from different trees")
    m = min(u.level, v.level, _first_disagreement(u.residue, v.residue))
    return (u.level - m) + (v.level - m)


def busemann(v: Vertex) -> int:
    """Level function relative to omega; equals the vertex level."""
    return v.level


def _root_path(x: Point) -> Iterator[Vertex]:
    """The geodesic from the root o toward x, one vertex at a time."""
    q = x.q
    if isinstance(x, Vertex):
        m = min(0, x.level, valuation(x.residue))
        for lvl in range(0, m - 1, -1):
            yield Vertex(q, lvl, zero(q))
        for lvl in range(m + 1, x.level + 1):
            yield Vertex(q, lvl, truncate_below(x.residue, lvl))
        return
    if x.is_omega:
        for lvl in itertools.count(0, -1):
            yield Vertex(q, lvl, zero(q))
    else:
        m = min(0, x.lowest_nonzero())
        if m == math.inf:
            m = 0
        m = int(m)
        for lvl in range(0, m - 1, -1):
            yield Vertex(q, lvl, zero(q))
        for lvl in itertools.count(m + 1):
            yield Vertex(q, lvl, x.prefix(lvl))


def confluent_from_root(x: Point, y: Point) -> Point:
    """Last common element of the root geodesics toward x and y.

    When x == y the common convention returns the point itself (also for a
    pair of equal ends).
    """
    if x.q != y.q:
        raise ModulusMismatchError("points from different trees")
    if x == y:
        return x
    last = None
    for a, b in zip(_root_path(x), _root_path(y)):
        if a != b:
            break
        last = a
    if last is None:
        raise AssertionError("root geodesics always share the root")
    return last


def theta(x: Point, y: Point) -> Fraction:
    """Ultrametric q^{-|x meet y|} on the compactified tree; 0 iff x == y."""
    if x == y:
        return Fraction(0)
    c = confluent_from_root(x, y)
    return Fraction(1, x.q ** distance(root(x.q), c))


def ray_vertex(xi: End, n: int, frm: Vertex) -> Vertex:
    """The n-th vertex on the geodesic ray from ``frm`` representing ``xi``."""
    if n < 0:
        raise ValueError("ray index must be non-negative")
    if xi.q != frm.q:
        raise ModulusMismatchError("end and vertex from different trees")
    q = frm.q
    if xi.is_omega:
        lvl = frm.level - n
        return Vertex(q, lvl, truncate_below(frm.residue, lvl))
    f = _first_disagreement(frm.residue, xi.prefix(frm.level))
    m = min(frm.level, f)
    up = frm.level - m  # steps toward omega before turning down along xi
    if n <= up:
        lvl = frm.level - n
        return Vertex(q, lvl, truncate_below(frm.residue, lvl))
    lvl = m + (n - up)
    return Vertex(q, lvl, xi.prefix(lvl))


def ball(center: Vertex, radius: int) -> tuple[set[Vertex], dict[Vertex, set[Vertex]]]:
    """Materialize the radius-``radius`` ball: vertex set and adjacency."""
    seen = {center}
    adj: dict[Vertex, set[Vertex]] = {center: set()}
    frontier = [center]
    for _ in range(radius):
        nxt = []
        for v in frontier:
            for w in [parent(v), *children(v)]:
                adj.setdefault(v, set()).add(w)
                adj.setdefault(w, set()).add(v)
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    # drop adjacency entries pointing outside the ball
    adj = {v: {w for w in nb if w in seen} for v, nb in adj.items() if v in seen}
    return seen, adj


def bfs_distance(adj: dict[Vertex, set[Vertex]], u: Vertex, v: Vertex) -> int:
    """Edge count between u and v inside a materialized ball."""
    if u == v:
        return 0
    dist = {u: 0}
    frontier = [u]
    while frontier:
        nxt = []
        for a in frontier:
            for b in adj[a]:
                if b not in dist:
                    dist[b] = dist[a] + 1
                    if b == v:
                        return dist[b]
                    nxt.append(b)
        frontier = nxt
    raise ValueError("vertices not connected inside the materialized ball")
