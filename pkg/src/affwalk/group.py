"""The affine group A(q) = Z x| Digits acting on the ball tree, and finite
products of such groups.

An element (n, b) is the map x -> t^n x + b on digit series.  The shift part
n is the Busemann displacement (elements with n > 0 move away from omega);
the translation part b lies in the restricted direct sum of Z/q over Z.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import digits as dg
from .digits import Digits, ModulusMismatchError, valuation, zero
from .tree import End, Vertex, distance, end_from_digits, make_end, root


@dataclass(frozen=True)
class AffineElem:
    q: int
    n: int
    b: Digits

    def __post_init__(self):
        if self.b.q != self.q:
            raise ModulusMismatchError("translation modulus differs from element modulus")

    def __str__(self) -> str:
        return f"{self.q}:({self.n}; {dg.format_digits(self.b)})"


def identity(q: int) -> AffineElem:
    return AffineElem(q, 0, zero(q))


def compose(g: AffineElem, h: AffineElem) -> AffineElem:
    """g then h as maps applied right-to-left: (g*h)(x) = g(h(x))."""
    if g.q != h.q:
        raise ModulusMismatchError("composing elements over different moduli")
    return AffineElem(g.q, g.n + h.n, dg.add(g.b, dg.shift(h.b, g.n)))


def inverse(g: AffineElem) -> AffineElem:
    return AffineElem(g.q, -g.n, dg.negate(dg.shift(g.b, -g.n)))


def act_vertex(g: AffineElem, v: Vertex) -> Vertex:
    """Image of the ball v under x -> t^n x + b."""
    if g.q != v.q:
        raise ModulusMismatchError("element and vertex over different moduli")
    lvl = v.level + g.n
    res = dg.truncate_below(dg.add(dg.shift(v.residue, g.n), g.b), lvl)
    return Vertex(v.q, lvl, res)


def act_end(g: AffineElem, xi: End) -> End:
    """Action on ends; omega is fixed, streams map to shifted-plus-b streams."""
    if g.q != xi.q:
        raise ModulusMismatchError("element and end over different moduli")
    if xi.is_omega:
        return xi
    q = g.q
    p_new = xi.period_start + g.n
    if g.b.entries:
        p_new = max(p_new, max(g.b.support()) + 1)
    ell = len(xi.word)
    off = (p_new - g.n - xi.period_start) % ell
    word = tuple(xi.word[(off + j) % ell] for j in range(ell))
    # everything below p_new that can carry a digit: the shifted pre, the
    # translation's support, and the shifted periodic region up to p_new
    lo_candidates = [i + g.n for i, _ in xi.pre.entries] + [i for i, _ in g.b.entries]
    lo_candidates.append(xi.period_start + g.n)
    lo = min(lo_candidates)
    pre = {}
    for i in range(min(lo, p_new), p_new):
        d = (xi.digit(i - g.n) + g.b.digit(i)) % q
        if d:
            pre[i] = d
    return make_end(q, pre, p_new, word)


def horocyclic(g: AffineElem) -> int:
    """Busemann displacement h(g o); a homomorphism to Z."""
    return g.n


def gauge_T(g: AffineElem) -> int:
    """Tree gauge |g| = d(o, g o)."""
    o = root(g.q)
    return distance(o, act_vertex(g, o))


def fixed_end(g: AffineElem) -> End:
    """The unique end besides omega fixed by a hyperbolic element (n != 0).

    Solves t^n xi + b = xi; for n > 0 the solution is sum_{j>=0} t^{jn} b,
    eventually periodic with period dividing n.  A hyperbolic element and
    its inverse fix the same end, which settles n < 0.
    """
    if g.n == 0:
        raise ValueError("horocyclic elements have no canonical fixed end")
    if g.n < 0:
        return fixed_end(inverse(g))
    if g.b.is_zero():
        return end_from_digits(zero(g.q))
    lo = min(g.b.support())
    hi = max(g.b.support())

    def digit_at(x: int) -> int:
        total = 0
        j = 0
        while x - j * g.n >= lo:
            total += g.b.digit(x - j * g.n)
            j += 1
        return total % g.q

    pre = {x: digit_at(x) for x in range(lo, hi + 1)}
    word = tuple(digit_at(hi + 1 + j) for j in range(g.n))
    return make_end(g.q, {i: d for i, d in pre.items() if d}, hi + 1, word)


@dataclass(frozen=True)
class ProductElem:
    """One affine element per factor of the product group P."""

    factors: tuple[AffineElem, ...]

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(f.q for f in self.factors)

    def __str__(self) -> str:
        return "[" + ", ".join(str(f) for f in self.factors) + "]"


def p_identity(moduli: tuple[int, ...]) -> ProductElem:
    return ProductElem(tuple(identity(q) for q in moduli))


def _check_product(g: ProductElem, h: ProductElem) -> None:
    if g.moduli != h.moduli:
        raise ModulusMismatchError("product elements over different configurations")


def p_compose(g: ProductElem, h: ProductElem) -> ProductElem:
    _check_product(g, h)
    return ProductElem(tuple(compose(a, b) for a, b in zip(g.factors, h.factors)))


def p_inverse(g: ProductElem) -> ProductElem:
    return ProductElem(tuple(inverse(f) for f in g.factors))


def gauge_P(g: ProductElem) -> int:
    """Product gauge: sum of the per-factor tree gauges."""
    return sum(gauge_T(f) for f in g.factors)


def shift_generator(moduli: tuple[int, ...], i: int, power: int = 1) -> ProductElem:
    """The pure level shift sigma^(i): (power, {}) in factor i, identity elsewhere."""
    return ProductElem(
        tuple(
            AffineElem(q, power if j == i else 0, zero(q))
            for j, q in enumerate(moduli)
        )
    )


def decompose_into_J(g: ProductElem) -> list[ProductElem]:
    """Write g as an ordered product of elements of J = {|a|_P <= 1}.

    Peels off sigma^(i) powers matching the horocyclic values, then
    conjugates the horocyclic remainder into the stabilizer of o by a word
    of sigma letters.
    """
    moduli = g.moduli
    k = len(moduli)
    letters: list[ProductElem] = []
    betas = []
    for i, f in enumerate(g.factors):
        c = f.n
        step = 1 if c > 0 else -1
        for _ in range(abs(c)):
            letters.append(shift_generator(moduli, i, step))
        betas.append(compose(AffineElem(f.q, -c, zero(f.q)), f))
    ms = []
    for beta in betas:
        v = valuation(beta.b)
        ms.append(0 if v >= 0 else int(v))
    omega_letters: list[ProductElem] = []
    for i, m in enumerate(ms):
        for _ in range(-m):
            omega_letters.append(shift_generator(moduli, i, -1))
    stab = ProductElem(
        tuple(
            AffineElem(beta.q, 0, dg.shift(beta.b, -m))
            for beta, m in zip(betas, ms)
        )
    )
    out = letters + omega_letters
    if stab != p_identity(moduli):
        out.append(stab)
    for i, m in enumerate(ms):
        for _ in range(-m):
            out.append(shift_generator(moduli, i, 1))
    return out


def product_of(elems: list[ProductElem], moduli: tuple[int, ...]) -> ProductElem:
    acc = p_identity(moduli)
    for e in elems:
        acc = p_compose(acc, e)
    return acc


def format_product(g: ProductElem) -> str:
    return str(g)


def parse_affine(text: str) -> AffineElem:
    s = text.strip()
    head, _, rest = s.partition(":")
    q = int(head)
    rest = rest.strip()
    if not (rest.startswith("(") and rest.endswith(")")):
        raise ValueError(f"bad affine literal {text!r}")
    n_s, _, b_s = rest[1:-1].partition(";")
    return AffineElem(q, int(n_s), dg.parse_digits(b_s))


def parse_product(text: str) -> ProductElem:
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ValueError(f"bad product literal {text!r}")
    inner = s[1:-1].strip()
    if not inner:
        raise ValueError("a product element needs at least one factor")
    parts = []
    depth = 0
    start = 0
    for pos, ch in enumerate(inner):
        if ch in "({[":
            depth += 1
        elif ch in ")}]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(inner[start:pos])
            start = pos + 1
    parts.append(inner[start:])
    return ProductElem(tuple(parse_affine(p) for p in parts))
