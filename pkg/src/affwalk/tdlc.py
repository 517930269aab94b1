"""The semidirect product of a contracted digit group with the shift, its
coset tree, and the representation into the affine group of that tree.

Concrete model for parameters (q, m): the ambient group G is the restricted
product of Z/Q over Z with Q = q^m, the automorphism ``alpha`` shifts digit
indices up by one, and V is the compact open subgroup of digits supported on
[0, depth).  Then V is tidy for alpha with s(alpha) = 1 and
s(alpha^{-1}) = Q = q^m, V_- = V, and the union of the alpha^{-k}(V_-) is
the whole digit group, so the coset tree of V_- in V_-- x| <alpha> is the
homogeneous tree of degree q^m + 1.  (Realizing the same degree with q-ary
digits and an m-index shift would make the horocyclic part (Z/q)^m per
block, which no modulus-q^m affine element reproduces once m >= 2; this
model keeps the representation exactly affine.)
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from . import digits as dg
from .digits import Digits, shift, truncate_below, valuation, zero
from .group import AffineElem, ProductElem, gauge_T
from .scale import (
    FACTOR_NON_EXCEPTIONAL,
    ExceptionalImageError,
    SubgroupSpec,
    classify_factor,
)
from .tree import Vertex
from .walk import Measure, WalkReport, drift, rate_of_escape


@dataclass(frozen=True)
class AlphaModel:
    """Parameters (q, m) with truncation depth (in block indices)."""

    q: int
    m: int
    depth: int = 64

    def __post_init__(self):
        if self.q < 2 or self.m < 1:
            raise ValueError("need q >= 2 and m >= 1")
        if self.depth < 2:
            raise ValueError("truncation depth too small")

    @property
    def modulus(self) -> int:
        return self.q**self.m

    def alpha(self, v: Digits, power: int = 1) -> Digits:
        return shift(v, power)


@dataclass(frozen=True)
class VmmElem:
    """An element (v, alpha^j) of the semidirect product."""

    v: Digits
    j: int


def vmm_identity(model: AlphaModel) -> VmmElem:
    return VmmElem(zero(model.modulus), 0)


def vmm_compose(model: AlphaModel, a: VmmElem, b: VmmElem) -> VmmElem:
    return VmmElem(dg.add(a.v, model.alpha(b.v, a.j)), a.j + b.j)


def vmm_inverse(model: AlphaModel, a: VmmElem) -> VmmElem:
    return VmmElem(dg.negate(model.alpha(a.v, -a.j)), -a.j)


def pi_map(model: AlphaModel, g: VmmElem) -> AffineElem:
    """The affine element acting on cosets of V_- exactly as left
    multiplication by g does: (v, alpha^j) maps the coset at level s with
    representative w to level s + j with representative v + alpha^j(w)."""
    if g.v.q != model.modulus:
        raise ValueError("element digits must use modulus q^m")
    return AffineElem(model.modulus, g.j, g.v)


def eta(model: AlphaModel, g: VmmElem) -> int:
    """The shift exponent; equals the horocyclic value of the image."""
    return g.j


def vmma_gauge(model: AlphaModel, g: VmmElem) -> int:
    """d(V_-, g V_-) in the coset tree, via the representation."""
    return gauge_T(pi_map(model, g))


@dataclass(frozen=True)
class CosetVertex:
    """The left coset rep * alpha^level(V_-); rep canonical below the level."""

    rep: Digits
    level: int

    def __post_init__(self):
        if truncate_below(self.rep, self.level) != self.rep:
            raise ValueError("representative must be reduced mod the shifted subgroup")

    def to_tree_vertex(self) -> Vertex:
        return Vertex(self.rep.q, self.level, self.rep)


def coset_of(model: AlphaModel, v: Digits, level: int) -> CosetVertex:
    return CosetVertex(truncate_below(v, level), level)


def vmm_act_coset(model: AlphaModel, g: VmmElem, c: CosetVertex) -> CosetVertex:
    """Left multiplication on cosets, computed in the semidirect product."""
    return coset_of(model, dg.add(g.v, model.alpha(c.rep, g.j)), c.level + g.j)


@dataclass
class CosetTree:
    model: AlphaModel
    j_min: int
    j_max: int
    levels: dict[int, list[CosetVertex]]
    edges: list[tuple[CosetVertex, CosetVertex]]  # (parent, child)

    def out_degree(self, v: CosetVertex) -> int:
        return sum(1 for p, _ in self.edges if p == v)

    def in_degree(self, v: CosetVertex) -> int:
        return sum(1 for _, c in self.edges if c == v)


def build_coset_tree(model: AlphaModel, j_min: int, j_max: int) -> CosetTree:
    """Materialize the window [j_min, j_max]: the descendants of the coset
    (0, j_min), with an edge (v, s) -> (w, s+1) iff w lies in v alpha^s(V_-)."""
    if j_max <= j_min:
        raise ValueError("window must contain at least two levels")
    span = j_max - j_min
    if span > model.depth - 1:
        raise ValueError("window deeper than the truncation depth")
    if model.modulus**span > 200_000:
        raise ValueError("window too large to materialize")
    Q = model.modulus
    levels: dict[int, list[CosetVertex]] = {}
    for j in range(j_min, j_max + 1):
        verts = []
        idx_range = range(j_min, j)
        for combo in itertools.product(range(Q), repeat=len(idx_range)):
            rep = Digits.from_map(Q, dict(zip(idx_range, combo)))
            verts.append(CosetVertex(rep, j))
        levels[j] = verts
    edges = []
    for j in range(j_min, j_max):
        for v in levels[j]:
            for w in levels[j + 1]:
                # membership in v alpha^j(V_-): the difference is supported
                # at indices >= j
                diff = dg.sub(w.rep, v.rep)
                if valuation(diff) >= j:
                    edges.append((v, w))
    return CosetTree(model, j_min, j_max, levels, edges)


@dataclass
class TidyReport:
    q: int
    m: int
    enum_depth: int
    chain: int
    v_minus_equals_v: bool
    v_plus_chain_sizes: list[int]
    tidy_above: bool
    index_alpha: int          # [alpha(V) : V meet alpha(V)]
    index_alpha_inv: int      # [alpha^{-1}(V) : V meet alpha^{-1}(V)]
    s_alpha: int              # [alpha(V_+) : V_+]
    s_alpha_inv: int          # [alpha^{-1}(V_-) : V_-]
    v_mm_covers_window: bool

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n"


def _shift_tuple(t: tuple[int, ...], k: int) -> tuple[int, ...]:
    """Shift digits up by k within a fixed window, truncating both ends."""
    n = len(t)
    out = [0] * n
    for i, d in enumerate(t):
        if 0 <= i + k < n:
            out[i + k] = d
    return tuple(out)


def _coset_count(a: set[tuple[int, ...]], b: set[tuple[int, ...]], Q: int) -> int:
    """Number of cosets of b in a for subgroups of the windowed digit group
    (requires b subset of a); greedy peeling, no index formulas."""
    remaining = set(a)
    count = 0
    while remaining:
        x = next(iter(remaining))
        count += 1
        for y in b:
            z = tuple((xi + yi) % Q for xi, yi in zip(x, y))
            remaining.discard(z)
    return count


def tidy_subgroups(model: AlphaModel, enum_depth: int | None = None, chain: int = 2) -> TidyReport:
    """Tidiness evidence by exhaustive enumeration on a digit window.

    Subgroups are materialized inside the ambient window
    [-chain, enum_depth + chain): the top ``chain`` indices are scratch so
    that up to ``chain`` shifts stay exact, and every reported comparison
    first projects sets to the visible window [-chain, enum_depth), where
    the co-finite-upward subgroups are fully represented."""
    Q = model.modulus
    if enum_depth is None:
        # the product-set check costs |V_+| * |V| ~ Q^(2 depth)
        enum_depth = 1
        while (
            enum_depth < 6
            and Q ** (2 * (enum_depth + 1)) <= 300_000
            and Q ** (enum_depth + 1 + 2 * chain) <= 600_000
        ):
            enum_depth += 1
    width = enum_depth + 2 * chain
    if Q**width > 2_000_000:
        raise ValueError("enumeration window too large")
    visible = enum_depth + chain  # leading coordinates of each vector

    def subgroup(lo: int) -> set[tuple[int, ...]]:
        """All ambient vectors supported on [lo, enum_depth + chain)."""
        offset = lo + chain
        out = set()
        for combo in itertools.product(range(Q), repeat=width - offset):
            vec = [0] * width
            vec[offset:] = combo
            out.add(tuple(vec))
        return out

    def project(s: set[tuple[int, ...]]) -> set[tuple[int, ...]]:
        return {t[:visible] for t in s}

    V = subgroup(0)
    V_vis = project(V)
    alpha_V = project({_shift_tuple(t, 1) for t in V})
    alpha_inv_V = project({_shift_tuple(t, -1) for t in V})
    # V_+ chain: intersections of forward images (the contracted side);
    # upward shifts of full cubes stay exact inside the ambient window
    v_plus = set(V)
    v_plus_sizes = [len(project(v_plus))]
    cur = set(V)
    for _ in range(chain):
        cur = {_shift_tuple(t, 1) for t in cur}
        v_plus &= cur
        v_plus_sizes.append(len(project(v_plus)))
    v_plus_vis = project(v_plus)
    # V_- chain: backward images all contain V, so the intersection stays V
    v_minus_ok = True
    cur = set(V)
    for _ in range(chain):
        cur = {_shift_tuple(t, -1) for t in cur}
        if not V_vis <= project(cur):
            v_minus_ok = False
    v_minus_vis = set(V_vis)
    products = {
        tuple((a + b) % Q for a, b in zip(x, y)) for x in v_plus_vis for y in v_minus_vis
    }
    tidy_above = products == V_vis
    index_alpha = _coset_count(alpha_V, V_vis & alpha_V, Q)
    index_alpha_inv = _coset_count(alpha_inv_V, V_vis & alpha_inv_V, Q)
    alpha_v_plus = project({_shift_tuple(t, 1) for t in v_plus})
    s_alpha = _coset_count(alpha_v_plus, v_plus_vis & alpha_v_plus, Q)
    s_alpha_inv = _coset_count(alpha_inv_V, v_minus_vis & alpha_inv_V, Q)
    # V_--: unions of alpha^{-k}(V_-) exhaust every visible vector
    union = set(V_vis)
    cur = set(V)
    for _ in range(chain):
        cur = {_shift_tuple(t, -1) for t in cur}
        union |= project(cur)
    covers = union >= project(subgroup(-chain))
    return TidyReport(
        q=model.q,
        m=model.m,
        enum_depth=enum_depth,
        chain=chain,
        v_minus_equals_v=v_minus_ok,
        v_plus_chain_sizes=v_plus_sizes,
        tidy_above=tidy_above,
        index_alpha=index_alpha,
        index_alpha_inv=index_alpha_inv,
        s_alpha=s_alpha,
        s_alpha_inv=s_alpha_inv,
        v_mm_covers_window=covers,
    )


@dataclass
class VmmaWalkResult:
    report: WalkReport
    eta_drift: Fraction
    trivial_boundary: bool


def vmma_walk(
    model: AlphaModel,
    atoms: tuple[tuple[VmmElem, Fraction], ...],
    n: int,
    trials: int,
    master_seed: int,
    depth: int = 20,
    enforce_hypotheses: bool = True,
) -> VmmaWalkResult:
    """Push the step distribution through the representation and run the
    walk engine; the triviality verdict is "eta drift <= 0".

    By default raises when the image of the support is exceptional (the
    boundary statements need a non-exceptional image); pass
    ``enforce_hypotheses=False`` to compute the rate and drift diagnostics
    for such measures anyway."""
    merged: dict[ProductElem, Fraction] = {}
    for g, w in atoms:
        img = ProductElem((pi_map(model, g),))
        merged[img] = merged.get(img, Fraction(0)) + w
    mu = Measure(tuple(merged.items()))
    spec = SubgroupSpec(tuple(merged.keys()))
    if enforce_hypotheses and classify_factor(spec, 0) != FACTOR_NON_EXCEPTIONAL:
        raise ExceptionalImageError(
            "support has exceptional image under the tree representation"
        )
    report = rate_of_escape(mu, n, trials, master_seed, depth=depth)
    d = drift(mu, 0)
    return VmmaWalkResult(report, d, d <= 0)
