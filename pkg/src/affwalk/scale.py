"""Scale and modular arithmetic on the affine digit model, plus the
exceptionality classification of finitely generated subgroups.

Two distinct notions live here and are kept apart deliberately:

* ``scale_element`` / ``is_uniscalar`` / ``is_unimodular_on_words`` evaluate
  the scale and modular function of the ambient closed affine group (where
  translations range over full digit tails) at elements of the generated
  subgroup.  In the closure the vertex stabilizers are tidy for every inner
  automorphism and the scale has the closed form q^max(-n, 0) per factor.

* ``relative_uniscalar`` / ``relative_unimodular`` treat the generated
  subgroup as a group in its own right: indices are witnessed by orbits of
  vertex tuples under word-stabilizers, following the stabilizer
  constructions that prove "fully exceptional iff uniscalar" and
  "unimodular iff exceptional".  The first family cannot satisfy those
  equivalences (a single level shift already has ambient scale q on one
  side); the second does.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .digits import Digits, valuation, zero
from .group import (
    AffineElem,
    ProductElem,
    act_end,
    act_vertex,
    compose,
    fixed_end,
    inverse,
    p_compose,
    p_identity,
    p_inverse,
)
from .tree import Vertex, root
from .walk import Measure

FACTOR_HOROCYCLIC = "exceptional-horocyclic"
FACTOR_FIXED_END = "exceptional-fixed-end"
FACTOR_NON_EXCEPTIONAL = "non-exceptional"

SUBGROUP_FULLY = "fully exceptional"
SUBGROUP_PARTIALLY = "partially exceptional"
SUBGROUP_NONE = "not partially exceptional"


class FullyExceptionalSupportError(RuntimeError):
    """The support generates a fully exceptional subgroup; the transience
    and boundary statements do not apply."""


class ExceptionalImageError(RuntimeError):
    """A pushed-forward walk has exceptional image; hypothesis failure."""


@dataclass(frozen=True)
class SubgroupSpec:
    generators: tuple[ProductElem, ...]

    def __post_init__(self):
        if not self.generators:
            raise ValueError("a subgroup spec needs at least one generator")
        moduli = self.generators[0].moduli
        for g in self.generators:
            if g.moduli != moduli:
                raise ValueError("generators over different product configurations")

    @property
    def moduli(self) -> tuple[int, ...]:
        return self.generators[0].moduli


@dataclass(frozen=True)
class ScaleResult:
    element: ProductElem
    per_factor: tuple[int, ...]
    total: int
    modular: Fraction

    def __post_init__(self):
        prod = 1
        for s in self.per_factor:
            prod *= s
        if prod != self.total:
            raise ValueError("total scale must be the product of the factors")


def _factor_scale(f: AffineElem) -> int:
    return f.q ** max(-f.n, 0)


def scale_element(g: ProductElem) -> ScaleResult:
    """Ambient scale per factor, total scale, and modular value.

    The modular value is computed twice: as prod q^-n directly and as
    s(g)/s(g^-1) from the two independent scale evaluations; they must agree.
    """
    per = tuple(_factor_scale(f) for f in g.factors)
    per_inv = tuple(_factor_scale(f) for f in p_inverse(g).factors)
    total = 1
    for s in per:
        total *= s
    total_inv = 1
    for s in per_inv:
        total_inv *= s
    modular = Fraction(total, total_inv)
    direct = Fraction(1)
    for f in g.factors:
        direct *= Fraction(f.q) ** (-f.n)
    if modular != direct:
        raise AssertionError("modular value mismatch between the two routes")
    return ScaleResult(g, per, total, modular)


def scale_oracle(g: ProductElem, depth: int) -> tuple[int, ...]:
    """Brute-force scale per factor: enumerate the truncated stabilizer of o,
    conjugate every element through the actual group operations, and count
    cosets of V meet alpha(V) in alpha(V) by their digit patterns below
    max(0, n).  Must equal the closed form."""
    counts = []
    for f in g.factors:
        if depth < abs(f.n) + 2:
            raise ValueError(f"depth {depth} too small for shift {f.n}; need >= |n|+2")
        q = f.q
        ginv = inverse(f)
        patterns = set()
        cut = max(0, f.n)
        for combo in itertools.product(range(q), repeat=depth):
            c = Digits.from_map(q, dict(enumerate(combo)))
            w = compose(compose(f, AffineElem(q, 0, c)), ginv)
            if w.n != 0:
                raise AssertionError("conjugate of a horocyclic element must be horocyclic")
            patterns.add(tuple((i, d) for i, d in w.b.entries if i < cut))
        counts.append(len(patterns))
    return tuple(counts)


def classify_factor(spec: SubgroupSpec, j: int) -> str:
    """Exceptionality of the j-th factor projection of the generated group."""
    gens = [g.factors[j] for g in spec.generators]
    if all(f.n == 0 for f in gens):
        return FACTOR_HOROCYCLIC
    hyper = next(f for f in gens if f.n != 0)
    xi = fixed_end(hyper)
    if all(act_end(f, xi) == xi for f in gens):
        return FACTOR_FIXED_END
    return FACTOR_NON_EXCEPTIONAL


def classify_subgroup(spec: SubgroupSpec) -> str:
    verdicts = [classify_factor(spec, j) for j in range(len(spec.moduli))]
    exceptional = [v != FACTOR_NON_EXCEPTIONAL for v in verdicts]
    if all(exceptional):
        return SUBGROUP_FULLY
    if any(exceptional):
        return SUBGROUP_PARTIALLY
    return SUBGROUP_NONE


def words_up_to(spec: SubgroupSpec, bound: int) -> set[ProductElem]:
    """All distinct elements expressible as words of length <= bound over the
    generators and their inverses (the identity included)."""
    if bound < 1:
        raise ValueError("sample bound must be >= 1")
    alphabet = []
    for g in spec.generators:
        alphabet.append(g)
        inv = p_inverse(g)
        if inv not in alphabet:
            alphabet.append(inv)
    seen = {p_identity(spec.moduli)}
    frontier = list(seen)
    for _ in range(bound):
        nxt = []
        for w in frontier:
            for a in alphabet:
                e = p_compose(w, a)
                if e not in seen:
                    seen.add(e)
                    nxt.append(e)
        frontier = nxt
    return seen


def is_uniscalar(spec: SubgroupSpec, sample_bound: int = 4) -> bool:
    """Ambient scale identically 1 on sampled words and their inverses.

    Sampled necessary condition: words of length <= sample_bound only.
    """
    for w in words_up_to(spec, sample_bound):
        if scale_element(w).total != 1:
            return False
        if scale_element(p_inverse(w)).total != 1:
            return False
    return True


def is_unimodular_on_words(spec: SubgroupSpec, sample_bound: int = 4) -> bool:
    """Ambient modular value identically 1 on sampled words."""
    return all(scale_element(w).modular == 1 for w in words_up_to(spec, sample_bound))


def _act_tuple(g: ProductElem, vs: tuple[Vertex, ...]) -> tuple[Vertex, ...]:
    return tuple(act_vertex(f, v) for f, v in zip(g.factors, vs))


def _orbit_under_stabilizer(
    words: set[ProductElem], fixed: tuple[Vertex, ...], moved: tuple[Vertex, ...]
) -> int:
    orbit = set()
    for w in words:
        if _act_tuple(w, fixed) == fixed:
            orbit.add(_act_tuple(w, moved))
    return len(orbit)


def _base_points(spec: SubgroupSpec, gamma: ProductElem) -> tuple[Vertex, ...]:
    """Stabilizer base per the uniscalarity construction: an axis vertex for
    hyperbolic factors, the common fixed vertex of o and gamma o otherwise."""
    vs = []
    for f in gamma.factors:
        q = f.q
        if f.n != 0:
            xi = fixed_end(f)
            vs.append(Vertex(q, 0, xi.prefix(0)))
        else:
            m = min(0, valuation(f.b))  # never inf: capped by 0
            vs.append(Vertex(q, int(m), zero(q)))
    return tuple(vs)


def relative_uniscalar(spec: SubgroupSpec, sample_bound: int = 4) -> bool:
    """Scale-1 verdict for the generated subgroup with its own topology,
    witnessed by vertex-stabilizer orbits inside the word sample: for each
    sampled gamma the index [stab(gamma v) : stab(gamma v) meet stab(v)] is
    the size of the stab(gamma v)-orbit of v.  Any orbit larger than one is
    a scale witness above 1."""
    words = words_up_to(spec, sample_bound)
    for gamma in words:
        base = _base_points(spec, gamma)
        target = _act_tuple(gamma, base)
        if _orbit_under_stabilizer(words, target, base) > 1:
            return False
        if _orbit_under_stabilizer(words, base, target) > 1:
            return False
    return True


def relative_unimodular(spec: SubgroupSpec, sample_bound: int = 4) -> bool:
    """Modular-function-1 verdict for the generated subgroup itself: the
    modular value at gamma is |stab(gamma x) . x| / |stab(x) . gamma x|
    (orbit sizes within the word sample); unimodular iff all sampled ratios
    are 1."""
    words = words_up_to(spec, sample_bound)
    o = tuple(root(q) for q in spec.moduli)
    bases = [o]
    for g in spec.generators:
        bases.append(_base_points(spec, g))
    for gamma in words:
        for x in bases:
            gx = _act_tuple(gamma, x)
            num = _orbit_under_stabilizer(words, gx, x)
            den = _orbit_under_stabilizer(words, x, gx)
            if num != den:
                return False
    return True


def transience_hypothesis(mu: Measure) -> bool:
    """True when the support generates a subgroup that is not fully
    exceptional, the standing hypothesis for the boundary statements."""
    spec = SubgroupSpec(tuple(elem for elem, _ in mu.atoms))
    return classify_subgroup(spec) != SUBGROUP_FULLY
