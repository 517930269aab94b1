"""Empirical hitting measure on the product of end spaces: cylinder
histograms, stationarity gap, moving-anchor gauges and their sublinearity,
approximation maps, and the boundary-triviality criterion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .digits import Digits, truncate_below
from .group import (
    AffineElem,
    ProductElem,
    act_vertex,
    gauge_P,
    p_compose,
    p_inverse,
)
from .scale import FullyExceptionalSupportError, transience_hypothesis
from .tree import End, Vertex, ball, distance, end_from_digits, omega, ray_vertex, root
from .walk import (
    VERDICT_OMEGA,
    VERDICT_UNDECIDED,
    FactorScan,
    Measure,
    _factor_verdict,
    drift,
    scan_factors,
)

MAX_DEPTH = 16

OMEGA_BUCKET = "omega"


@dataclass
class CylinderHistogram:
    """Empirical distribution of the first ``depth`` digits (indices 0..D-1)
    of the limiting stream, per factor; trials converging to the fixed end
    and undecided trials are counted separately.

    ``window_counts`` keeps the same trials' digit words on the wider window
    [window_lo, window_hi), enough margin for one group convolution.
    """

    factor: int
    depth: int
    counts: dict[tuple[int, ...], int]
    total: int
    omega_count: int
    undecided_count: int
    window_lo: int
    window_hi: int
    window_counts: dict[tuple[int, ...], int] = field(default_factory=dict)

    def check_consistency(self) -> None:
        if sum(self.counts.values()) + self.omega_count + self.undecided_count != self.total:
            raise AssertionError("histogram counts do not add up to the trial count")

    def decided(self) -> int:
        return self.total - self.undecided_count

    def masses_at(self, d: int) -> dict[tuple[int, ...], Fraction]:
        """Depth-d cylinder masses (d <= depth) over the decided trials,
        marginalizing the recorded words."""
        if not (1 <= d <= self.depth):
            raise ValueError("marginal depth out of range")
        agg: dict[tuple[int, ...], int] = {}
        for word, c in self.counts.items():
            key = word[:d]
            agg[key] = agg.get(key, 0) + c
        dec = self.decided()
        return {w: Fraction(c, dec) for w, c in agg.items()}

    def max_cylinder_mass(self, d: int) -> Fraction:
        masses = self.masses_at(d)
        return max(masses.values(), default=Fraction(0))


def _window_margin(mu: Measure, j: int) -> int:
    return max(abs(elem.factors[j].n) for elem, _ in mu.atoms)


def hitting_histogram(
    mu: Measure, n: int, trials: int, depth: int, master_seed: int
) -> list[CylinderHistogram]:
    """Per factor: run seeded trials, classify each at stabilization depth
    ``depth``, and histogram the stabilized digit words of the random-end
    trials."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if depth > MAX_DEPTH:
        raise ValueError(f"depth {depth} above the documented bound {MAX_DEPTH}")
    if n <= depth:
        raise ValueError("horizon must exceed the depth for stabilization")
    k = mu.num_factors
    # one window wide enough for every factor keeps the scan single-pass
    margin = max(_window_margin(mu, j) for j in range(k))
    window = (-margin, depth + margin)
    hists = [
        CylinderHistogram(j, depth, {}, 0, 0, 0, window[0], window[1])
        for j in range(k)
    ]
    for t in range(trials):
        steps = mu.sample_steps(n, master_seed, t).tolist()
        scans = scan_factors(mu, steps, depth, window=window)
        for j in range(k):
            st = scans[j]
            h = hists[j]
            h.total += 1
            verdict = _factor_verdict(st, n)
            if verdict == VERDICT_OMEGA:
                h.omega_count += 1
            elif verdict == VERDICT_UNDECIDED:
                h.undecided_count += 1
            else:
                word = tuple(st.window_digits.get(i, 0) for i in range(depth))
                h.counts[word] = h.counts.get(word, 0) + 1
                wword = tuple(
                    st.window_digits.get(i, 0) for i in range(window[0], window[1])
                )
                h.window_counts[wword] = h.window_counts.get(wword, 0) + 1
    for h in hists:
        h.check_consistency()
    return hists


@dataclass
class StationarityReport:
    factor: int
    tv_gap: Fraction
    sigma_radius: float  # one-sigma multinomial fluctuation scale
    undecided_fraction: Fraction
    flagged: bool


def stationarity_gap(
    mu: Measure, hists: list[CylinderHistogram], master_seed: int
) -> list[StationarityReport]:
    """Total-variation distance, on depth-D cylinders plus the omega bucket,
    between the empirical hitting distribution and its one-step convolution
    by mu (each atom pulled back through the end action on recorded window
    words).  Exact rational arithmetic on the decided mass."""
    out = []
    for j, h in enumerate(hists):
        dec = h.decided()
        if dec == 0:
            out.append(StationarityReport(j, Fraction(0), 0.0, Fraction(1), True))
            continue
        base: dict[object, Fraction] = {OMEGA_BUCKET: Fraction(h.omega_count, dec)}
        for word, c in h.counts.items():
            base[word] = base.get(word, Fraction(0)) + Fraction(c, dec)
        mix: dict[object, Fraction] = {}
        for elem, w in mu.atoms:
            f = elem.factors[j]
            # omega is fixed by every affine element
            mix[OMEGA_BUCKET] = mix.get(OMEGA_BUCKET, Fraction(0)) + w * Fraction(h.omega_count, dec)
            for wword, c in h.window_counts.items():
                img = _push_word(f, wword, h.window_lo, h.depth)
                mix[img] = mix.get(img, Fraction(0)) + w * Fraction(c, dec)
        keys = set(base) | set(mix)
        tv = sum((abs(base.get(k, Fraction(0)) - mix.get(k, Fraction(0))) for k in keys), Fraction(0)) / 2
        # multinomial sampling scale for the same cylinders
        sigma = 0.5 * sum(
            math.sqrt(float(p * (1 - p)) / dec) for p in base.values()
        )
        undec = Fraction(h.undecided_count, h.total)
        out.append(StationarityReport(j, tv, sigma, undec, undec > Fraction(1, 100)))
    return out


def _push_word(
    f: AffineElem, wword: tuple[int, ...], w_lo: int, depth: int
) -> tuple[int, ...]:
    """Digits at [0, depth) of g . x for a stream x known on the window."""
    digits = {w_lo + i: d for i, d in enumerate(wword)}
    out = []
    for i in range(depth):
        out.append((digits.get(i - f.n, 0) + f.b.digit(i)) % f.q)
    return tuple(out)


def depth1_exact_masses(mu: Measure, factor: int = 0) -> dict[tuple[int, ...], Fraction]:
    """Exact depth-1 cylinder masses of the hitting measure by first-passage
    recursion on the horocyclic chain.

    Supported shape: q = 2, every atom shifts by +-1 in the factor and lights
    at most the lamp at relative index 0; drift must be positive."""
    q = mu.moduli[factor]
    if q != 2:
        raise ValueError("first-passage oracle implemented for q = 2 only")
    p0 = p1 = r0 = r1 = Fraction(0)
    for elem, w in mu.atoms:
        f = elem.factors[factor]
        support = f.b.support()
        if f.n not in (1, -1) or any(i != 0 for i in support):
            raise ValueError("oracle needs +-1 shifts with lamps only at index 0")
        toggles = bool(support)
        if f.n == 1:
            p1 += w if toggles else 0
            p0 += w if not toggles else 0
        else:
            r1 += w if toggles else 0
            r0 += w if not toggles else 0
    p, r = p0 + p1, r0 + r1
    if p <= r:
        raise ValueError("oracle needs positive drift")
    rho = r / p  # chance of returning to the current level from one above
    a = p0 * rho + r0  # continue without toggling the level-0 lamp
    c = p1 * rho + r1  # continue and toggle
    stop_even = p0 * (1 - rho)
    stop_odd = p1 * (1 - rho)
    det = (1 - a) ** 2 - c**2
    even = (stop_even * (1 - a) + c * stop_odd) / det
    odd = (stop_odd * (1 - a) + c * stop_even) / det
    if even + odd != 1:
        raise AssertionError("first-passage masses must sum to 1")
    return {(0,): even, (1,): odd}


@dataclass(frozen=True)
class TemperateGaugeSpec:
    """Moving-anchor gauge: factor i is measured from the vertex at ray
    index max(floor(n * m1_i), 0) along the ray toward u_i (the root when
    the drift is non-positive)."""

    u: tuple[End, ...]
    horizon: int
    drifts: tuple[Fraction, ...]

    def anchor(self, i: int) -> Vertex:
        q = self.u[i].q
        o = root(q)
        idx = max(math.floor(self.horizon * self.drifts[i]), 0)
        if idx == 0:
            return o
        return ray_vertex(self.u[i], idx, o)

    def anchors(self) -> tuple[Vertex, ...]:
        return tuple(self.anchor(i) for i in range(len(self.u)))


def gauge_value(g: ProductElem, spec: TemperateGaugeSpec) -> int:
    """Sum over factors of d(anchor_i, g_i o_i)."""
    total = 0
    for i, f in enumerate(g.factors):
        total += distance(spec.anchor(i), act_vertex(f, root(f.q)))
    return total


def _estimated_limits(mu: Measure, scans: list[FactorScan]) -> tuple[End, ...]:
    """Per-trial limit estimate: the stabilized digit prefix padded with
    zeros (diagnostic only; for non-positive drift the anchor ignores it)."""
    ends = []
    for j, st in enumerate(scans):
        q = mu.moduli[j]
        if drift(mu, j) > 0:
            ends.append(end_from_digits(Digits.from_map(q, st.final_b)))
        else:
            ends.append(omega(q))
    return tuple(ends)


def gauge_sublinearity(
    mu: Measure, n_grid: tuple[int, ...], trials: int, master_seed: int
) -> list[tuple[int, float]]:
    """Mean over trials of (1/n) |R_n| measured in the moving-anchor gauge
    built from the trial's own estimated limit point, for each n in the
    grid; decreasing toward 0 under the boundary hypotheses."""
    if not n_grid:
        raise ValueError("need at least one grid point")
    horizon = max(n_grid)
    k = mu.num_factors
    drifts = tuple(drift(mu, j) for j in range(k))
    sums = {n: 0.0 for n in n_grid}
    for t in range(trials):
        steps = mu.sample_steps(horizon, master_seed, t).tolist()
        scans = scan_factors(
            mu, steps, depth=20, checkpoints=tuple(n_grid), keep_final_b=True
        )
        limits = _estimated_limits(mu, scans)
        for pos, n in enumerate(sorted(set(n_grid))):
            spec = TemperateGaugeSpec(limits, n, drifts)
            total = 0
            for j in range(k):
                _, h, b = scans[j].elem_checkpoints[pos]
                vtx = Vertex(mu.moduli[j], h, truncate_below(b, h))
                total += distance(spec.anchor(j), vtx)
            sums[n] += total / n
    return [(n, sums[n] / trials) for n in sorted(set(n_grid))]


def approximation_gap(
    mu: Measure, n_grid: tuple[int, ...], trials: int, master_seed: int
) -> list[tuple[int, float]]:
    """Mean of (1/n) |R_n^{-1} Pi_n(u-hat)|_P where Pi_n maps the estimated
    limit to the pure shift-plus-translation element sending o to the anchor
    tuple; computed through actual group operations."""
    if not n_grid:
        raise ValueError("need at least one grid point")
    horizon = max(n_grid)
    k = mu.num_factors
    drifts = tuple(drift(mu, j) for j in range(k))
    sums = {n: 0.0 for n in n_grid}
    for t in range(trials):
        steps = mu.sample_steps(horizon, master_seed, t).tolist()
        scans = scan_factors(
            mu, steps, depth=20, checkpoints=tuple(n_grid), keep_final_b=True
        )
        limits = _estimated_limits(mu, scans)
        for pos, n in enumerate(sorted(set(n_grid))):
            spec = TemperateGaugeSpec(limits, n, drifts)
            r_factors = []
            pi_factors = []
            for j in range(k):
                _, h, b = scans[j].elem_checkpoints[pos]
                q = mu.moduli[j]
                r_factors.append(AffineElem(q, h, b))
                anchor = spec.anchor(j)
                pi_factors.append(AffineElem(q, anchor.level, anchor.residue))
            r_n = ProductElem(tuple(r_factors))
            pi_n = ProductElem(tuple(pi_factors))
            sums[n] += gauge_P(p_compose(p_inverse(r_n), pi_n)) / n
    return [(n, sums[n] / trials) for n in sorted(set(n_grid))]


def ball_vertex_counts(q: int, j_max: int, center: Vertex | None = None) -> list[int]:
    """|{v : d(center, v) <= j}| for j = 0..j_max by explicit enumeration;
    these are the Haar masses of the gauge balls (vertex stabilizers are
    normalized to measure 1), the quantity bounded by temperateness."""
    c = center if center is not None else root(q)
    _, adj = ball(c, j_max)
    dist = {c: 0}
    frontier = [c]
    while frontier:
        nxt = []
        for a in frontier:
            for b in adj[a]:
                if b not in dist:
                    dist[b] = dist[a] + 1
                    nxt.append(b)
        frontier = nxt
    counts = []
    for j in range(j_max + 1):
        counts.append(sum(1 for d in dist.values() if d <= j))
    return counts


@dataclass
class TrivialityResult:
    trivial: bool
    drifts: tuple[Fraction, ...]
    explanation: str


def triviality_check(mu: Measure) -> TrivialityResult:
    """Boundary trivial iff every factor drift is <= 0; requires the
    not-fully-exceptional hypothesis."""
    if not transience_hypothesis(mu):
        raise FullyExceptionalSupportError(
            "fully exceptional support: boundary criteria do not apply"
        )
    drifts = tuple(drift(mu, j) for j in range(mu.num_factors))
    trivial = all(d <= 0 for d in drifts)
    parts = [f"factor {j}: drift {d}" for j, d in enumerate(drifts)]
    verdict = "trivial" if trivial else "non-trivial"
    return TrivialityResult(trivial, drifts, f"{verdict}; " + "; ".join(parts))
