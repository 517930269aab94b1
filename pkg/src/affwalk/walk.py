"""Seeded Monte Carlo engine for right random walks on the product group.

Randomness contract: every trial owns the counter-based stream
``Philox(key=(master_seed, trial_index))`` and consumes one raw 64-bit word
per step.  Atoms are picked by inverse CDF against exact integer thresholds
ceil(cum_k * 2^64) (equivalent to cross-multiplying the rational cumulative
weights against the uniform word, no floating division), so measures with
dyadic weights are sampled exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .digits import Digits
from .group import ProductElem, gauge_P, p_compose, p_identity

_U64 = 2**64


def _philox_words(master_seed: int, trial: int, count: int) -> np.ndarray:
    if not (0 <= master_seed < _U64):
        raise ValueError("master seed must fit in 64 bits")
    bg = np.random.Philox(key=np.array([master_seed, trial], dtype=np.uint64))
    return bg.random_raw(count)


@dataclass(frozen=True)
class Measure:
    """Finitely supported step distribution: distinct atoms with positive
    rational weights summing exactly to 1."""

    atoms: tuple[tuple[ProductElem, Fraction], ...]

    def __post_init__(self):
        if not self.atoms:
            raise ValueError("a measure needs at least one atom")
        moduli = self.atoms[0][0].moduli
        seen = set()
        total = Fraction(0)
        for elem, w in self.atoms:
            if elem.moduli != moduli:
                raise ValueError("atoms live on different product configurations")
            if elem in seen:
                raise ValueError(f"duplicate atom {elem}")
            seen.add(elem)
            if not isinstance(w, Fraction) or w <= 0:
                raise ValueError("weights must be positive rationals")
            total += w
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")

    @property
    def moduli(self) -> tuple[int, ...]:
        return self.atoms[0][0].moduli

    @property
    def num_factors(self) -> int:
        return len(self.moduli)

    def thresholds(self) -> np.ndarray:
        """ceil(cum_k * 2^64) for all atoms but the last, as uint64."""
        cum = Fraction(0)
        out = []
        for _, w in self.atoms[:-1]:
            cum += w
            out.append(-(-(cum.numerator * _U64) // cum.denominator))
        return np.array(out, dtype=np.uint64)

    def sample_steps(self, n: int, master_seed: int, trial: int) -> np.ndarray:
        """The first n atom indices of the trial's stream."""
        u = _philox_words(master_seed, trial, n)
        return np.searchsorted(self.thresholds(), u, side="right")

    def horocyclic_only(self, j: int) -> bool:
        return all(elem.factors[j].n == 0 for elem, _ in self.atoms)


def drift(mu: Measure, j: int) -> Fraction:
    """Mean horocyclic displacement of factor j, exact."""
    if not (0 <= j < mu.num_factors):
        raise ValueError(f"factor index {j} out of range")
    return sum((w * elem.factors[j].n for elem, w in mu.atoms), Fraction(0))


def first_moment(mu: Measure) -> Fraction:
    """Mean product gauge of a step, exact."""
    return sum((w * gauge_P(elem) for elem, w in mu.atoms), Fraction(0))


@dataclass
class Trajectory:
    """One sampled path: R_{k+1} = R_k * X_{k+1} with X i.i.d. from mu."""

    measure: Measure
    master_seed: int
    trial: int
    steps: list[int]

    @property
    def seed(self) -> tuple[int, int]:
        """The Philox key (master_seed, trial) owning this path's stream."""
        return (self.master_seed, self.trial)

    def partial_products(self) -> list[ProductElem]:
        out = []
        acc = p_identity(self.measure.moduli)
        for idx in self.steps:
            acc = p_compose(acc, self.measure.atoms[idx][0])
            out.append(acc)
        return out


def run_trajectory(mu: Measure, n: int, master_seed: int, trial: int = 0) -> Trajectory:
    if n < 1:
        raise ValueError("horizon must be >= 1")
    steps = mu.sample_steps(n, master_seed, trial).tolist()
    return Trajectory(mu, master_seed, trial, steps)


@dataclass
class FactorScan:
    """Exact per-factor summary of one scanned step sequence."""

    q: int
    final_h: int = 0
    final_dist: int = 0
    min_h: int = 0
    max_h: int = 0
    last_dip: int = 0        # last step index with h < depth
    last_dip_lag: int = 0    # same against the lag-widened threshold
    last_rise: int = 0       # last step index with h >= -depth
    word_change: int = 0     # last step that edited a digit inside the window
    window_digits: dict = field(default_factory=dict)
    final_b: dict = field(default_factory=dict)
    h_checkpoints: list = field(default_factory=list)
    elem_checkpoints: list = field(default_factory=list)  # (step, h, full b)


def _atom_tables(mu: Measure):
    """Per-factor (shift, digit entries) per atom, plus the max lamp lag
    (how far below the current level an atom can edit digits)."""
    k = mu.num_factors
    shifts = [[elem.factors[j].n for elem, _ in mu.atoms] for j in range(k)]
    items = [[elem.factors[j].b.entries for elem, _ in mu.atoms] for j in range(k)]
    lags = []
    for j in range(k):
        lag = 0
        for ent in items[j]:
            for idx, _ in ent:
                lag = max(lag, -idx)
        lags.append(lag)
    return shifts, items, lags


def scan_factors(
    mu: Measure,
    steps: list[int],
    depth: int,
    window: tuple[int, int] | None = None,
    checkpoints: tuple[int, ...] = (),
    keep_final_b: bool = False,
) -> list[FactorScan]:
    """One exact pass over a step sequence, per factor: horocyclic value,
    gauge, dip/rise times against +-depth, digit-window edit times."""
    moduli = mu.moduli
    shifts, items, lags = _atom_tables(mu)
    cps = sorted(set(checkpoints))
    out = []
    for j, q in enumerate(moduli):
        st = FactorScan(q=q)
        sh = shifts[j]
        it = items[j]
        track_window = window is not None
        w_lo, w_hi = window if track_window else (0, 0)
        dip_hi = depth
        # digits below the window top can only change while h sits below it
        # plus the lamp lag, so edits after this dip are impossible
        dip_lag = (w_hi if track_window else depth) + lags[j]
        rise_lo = -depth
        h = 0
        b: dict[int, int] = {}
        cur_val: float = math.inf  # min support of b
        min_h = 0
        max_h = 0
        last_dip = 0
        last_dip_lag = 0
        last_rise = 0
        word_change = 0
        cp_iter = iter(cps)
        next_cp = next(cp_iter, None)
        for step_no, idx in enumerate(steps, start=1):
            ent = it[idx]
            if ent:
                for i, d in ent:
                    pos = i + h
                    v = (b.get(pos, 0) + d) % q
                    if v:
                        b[pos] = v
                        if pos < cur_val:
                            cur_val = pos
                    else:
                        del b[pos]
                        if pos == cur_val:
                            cur_val = min(b) if b else math.inf
                    if track_window and w_lo <= pos < w_hi:
                        word_change = step_no
            h += sh[idx]
            if h < min_h:
                min_h = h
            elif h > max_h:
                max_h = h
            if h < dip_hi:
                last_dip = step_no
            if h < dip_lag:
                last_dip_lag = step_no
            if h >= rise_lo:
                last_rise = step_no
            if next_cp is not None and step_no == next_cp:
                st.h_checkpoints.append((step_no, h))
                # full translation part, so R_n itself is reconstructible
                st.elem_checkpoints.append((step_no, h, Digits.from_map(q, b)))
                next_cp = next(cp_iter, None)
        st.final_h = h
        st.final_dist = h - 2 * min(0, h, cur_val)
        st.min_h = min_h
        st.max_h = max_h
        st.last_dip = last_dip
        st.last_dip_lag = last_dip_lag
        st.last_rise = last_rise
        st.word_change = word_change
        if track_window:
            st.window_digits = {i: d for i, d in b.items() if w_lo <= i < w_hi}
        if keep_final_b:
            st.final_b = dict(b)
        out.append(st)
    return out


VERDICT_OMEGA = "omega"
VERDICT_RANDOM_END = "random end"
VERDICT_UNDECIDED = "undecided"


def _factor_verdict(st: FactorScan, n: int) -> str:
    # Random end: h crossed +depth and stayed there, and no tracked digit
    # was edited after the (lag-widened) final dip, so the recorded window
    # is the limit end's digit word.
    if st.last_dip < n and st.word_change <= st.last_dip_lag:
        return VERDICT_RANDOM_END
    if st.last_rise < n:
        return VERDICT_OMEGA
    return VERDICT_UNDECIDED


def convergence_verdict(
    traj: Trajectory, depth: int, window: tuple[int, int] | None = None
) -> list[str]:
    """Per-factor verdict at stabilization depth ``depth``."""
    if depth < 1:
        raise ValueError("stabilization depth must be >= 1")
    if window is None:
        window = (0, depth)
    scans = scan_factors(traj.measure, traj.steps, depth, window=window)
    return [_factor_verdict(st, len(traj.steps)) for st in scans]


def regularity_stats(traj: Trajectory) -> tuple[list[float], list[float]]:
    """((1/n) d(R_n o, R_{n+1} o))_n and ((1/n) |R_n o|_P)_n for one path.

    Distances are tracked incrementally: the residues of consecutive orbit
    vertices differ exactly on the freshly shifted atom support, which pins
    the confluent level without materializing vertices.
    """
    mu = traj.measure
    moduli = mu.moduli
    k = len(moduli)
    shifts, items, _ = _atom_tables(mu)
    hs = [0] * k
    bs: list[dict[int, int]] = [{} for _ in range(k)]
    vals: list[float] = [math.inf] * k
    step_series: list[float] = []
    norm_series: list[float] = []
    for step_no, idx in enumerate(traj.steps, start=1):
        step_d = 0
        total = 0
        for j in range(k):
            q = moduli[j]
            h_old = hs[j]
            vmin = math.inf
            for i, d in items[j][idx]:
                pos = i + h_old
                if pos < vmin:
                    vmin = pos
                v = (bs[j].get(pos, 0) + d) % q
                if v:
                    bs[j][pos] = v
                    if pos < vals[j]:
                        vals[j] = pos
                else:
                    del bs[j][pos]
                    if pos == vals[j]:
                        vals[j] = min(bs[j]) if bs[j] else math.inf
            h_new = h_old + shifts[j][idx]
            m = min(h_old, h_new, vmin)
            step_d += (h_old - m) + (h_new - m)
            hs[j] = h_new
            total += h_new - 2 * min(0, h_new, vals[j])
        step_series.append(step_d / step_no)
        norm_series.append(total / step_no)
    return step_series, norm_series


@dataclass
class FactorReport:
    factor: int
    rate_mean: float
    rate_stderr: float
    h_drift_mean: float
    h_drift_stderr: float
    verdict_counts: dict[str, int]


@dataclass
class WalkReport:
    trials: int
    horizon: int
    master_seed: int
    depth: int
    factors: list[FactorReport]

    def to_json(self) -> str:
        payload = {
            "trials": self.trials,
            "horizon": self.horizon,
            "master_seed": self.master_seed,
            "depth": self.depth,
            "factors": [
                {
                    "factor": f.factor,
                    "rate_mean": f.rate_mean,
                    "rate_stderr": f.rate_stderr,
                    "h_drift_mean": f.h_drift_mean,
                    "h_drift_stderr": f.h_drift_stderr,
                    "verdict_counts": dict(sorted(f.verdict_counts.items())),
                }
                for f in self.factors
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["factor,rate_mean,rate_stderr,h_drift_mean,h_drift_stderr,omega,random_end,undecided"]
        for f in self.factors:
            vc = f.verdict_counts
            lines.append(
                f"{f.factor},{f.rate_mean!r},{f.rate_stderr!r},{f.h_drift_mean!r},"
                f"{f.h_drift_stderr!r},{vc.get(VERDICT_OMEGA, 0)},"
                f"{vc.get(VERDICT_RANDOM_END, 0)},{vc.get(VERDICT_UNDECIDED, 0)}"
            )
        return "\n".join(lines) + "\n"


def _mean_stderr(xs: list[float]) -> tuple[float, float]:
    n = len(xs)
    m = sum(xs) / n
    if n == 1:
        return m, 0.0
    var = sum((x - m) ** 2 for x in xs) / (n - 1)
    return m, math.sqrt(var / n)


def rate_of_escape(
    mu: Measure,
    n: int,
    trials: int,
    master_seed: int,
    depth: int = 20,
    threads: int = 1,
) -> WalkReport:
    """Per-factor empirical rate of escape (1/n) d(o, R_n o), empirical
    drift of the horocyclic value, and convergence verdicts at ``depth``,
    aggregated over seeded trials in trial order."""
    if n < 1 or trials < 1:
        raise ValueError("horizon and trial count must be >= 1")
    k = mu.num_factors

    def one(trial: int) -> list[FactorScan]:
        steps = mu.sample_steps(n, master_seed, trial).tolist()
        return scan_factors(mu, steps, depth, window=(0, depth))

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_trial = list(pool.map(one, range(trials)))
    else:
        per_trial = [one(t) for t in range(trials)]

    factors = []
    for j in range(k):
        rates = [per_trial[t][j].final_dist / n for t in range(trials)]
        hmeans = [per_trial[t][j].final_h / n for t in range(trials)]
        counts: dict[str, int] = {}
        for t in range(trials):
            v = _factor_verdict(per_trial[t][j], n)
            counts[v] = counts.get(v, 0) + 1
        rm, rs = _mean_stderr(rates)
        hm, hse = _mean_stderr(hmeans)
        factors.append(FactorReport(j, rm, rs, hm, hse, counts))
    return WalkReport(trials, n, master_seed, depth, factors)


def min_h_reach_counts(
    mu: Measure, n: int, trials: int, master_seed: int, level: int, factor: int = 0
) -> int:
    """Trials whose running minimum of the factor's horocyclic value
    reaches ``level`` or below; vectorized digit-free excursion diagnostic
    for the zero-drift regime."""
    shifts = np.array([elem.factors[factor].n for elem, _ in mu.atoms], dtype=np.int64)
    thresholds = mu.thresholds()
    hits = 0
    for t in range(trials):
        u = _philox_words(master_seed, t, n)
        idx = np.searchsorted(thresholds, u, side="right")
        h = np.cumsum(shifts[idx])
        if int(h.min()) <= level:
            hits += 1
    return hits
