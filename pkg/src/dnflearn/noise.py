"""Pointwise noise-operator evaluation and relevant-variable discovery.

T_rho f(x) is the expectation of f under independent per-coordinate
retention with probability rho.  Three interchangeable evaluation
strategies are provided: exhaustive enumeration over the free coordinates,
inclusion-exclusion over term subsets (exact at any dimension for small
term counts), and Monte Carlo sampling through the membership oracle (the
only mode honest to the query model).  On top of these sits the
line-search routine that grows a stem's auxiliary-variable set by locating
a coordinate whose flip jumps the noised restricted value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .booleans import (Assignment, Dnf, ScaleProfile, Term, eval_term,
                       hybrid, restrict, split_by_length)


# ---------------------------------------------------------------------------
# The three oracles


def noise_exact_enum(f: Dnf, x: Assignment, rho: float) -> float:
    """Exact T_rho f(x) by enumerating noise patterns over the free
    coordinates.  Pinned coordinates of a restriction are never perturbed."""
    if x.n != f.n:
        raise ValueError("dimension mismatch")
    free = f.free_indices()
    m = len(free)
    if m > 24:
        raise ValueError("too many free coordinates for exhaustive enumeration")
    pats = np.arange(1 << m, dtype=np.uint64)
    bits = np.full(1 << m, x.bits, dtype=np.uint64)
    ones = np.zeros(1 << m, dtype=np.int64)
    for j, i in enumerate(free):
        b = (pats >> np.uint64(j)) & np.uint64(1)
        bits ^= b << np.uint64(f.n - i)
        ones += b.astype(np.int64)
    sat = np.zeros(1 << m, dtype=bool)
    for t in f.terms:
        mask, val = t.mask_val(f.n)
        sat |= (bits & np.uint64(mask)) == np.uint64(val)
    # ones = number of flipped (non-retained) free coordinates
    w = rho ** (m - ones[sat]) * (1.0 - rho) ** ones[sat]
    return float(w.sum())


def noise_exact_ie(f: Dnf, x: Assignment, rho: float) -> float:
    """Exact T_rho f(x) by inclusion-exclusion over subsets of terms; works
    at any dimension as long as 2^k subsets are affordable."""
    if x.n != f.n:
        raise ValueError("dimension mismatch")
    if f.k > 20:
        raise ValueError("too many terms for inclusion-exclusion")
    pinned = {i for i, _ in f.pinned}
    term_lits = [{l.index: l.positive for l in t.literals} for t in f.terms]
    total = 0.0
    for sub in range(1, 1 << f.k):
        union = {}
        ok = True
        for j in range(f.k):
            if not sub >> j & 1:
                continue
            for i, pos in term_lits[j].items():
                if union.setdefault(i, pos) != pos:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue
        p = 1.0
        for i, pos in union.items():
            agrees = x.bit(i) == int(pos)
            if i in pinned:
                p *= 1.0 if agrees else 0.0
            else:
                p *= rho if agrees else 1.0 - rho
            if p == 0.0:
                break
        total += p if bin(sub).count("1") % 2 else -p
    return total


def noise_sampled(mq, x: Assignment, rho: float, samples: int, rng,
                  free_indices=None) -> float:
    """Monte Carlo estimate of T_rho f(x) through the membership oracle;
    uses exactly `samples` queries, deterministic under the rng."""
    if samples < 1:
        raise ValueError("need at least one sample")
    free = list(free_indices) if free_indices is not None else list(range(1, x.n + 1))
    flips = rng.random((samples, len(free))) < (1.0 - rho)
    bitvals = np.array([1 << (x.n - i) for i in free], dtype=np.uint64)
    xors = (flips.astype(np.uint64) * bitvals).sum(axis=1)
    total = 0
    for b in xors:
        total += mq(Assignment(x.n, x.bits ^ int(b)))
    return total / samples


def default_sample_count(gap: float, kappa: float) -> int:
    """Hoeffding budget for additive error gap/2 at failure kappa."""
    return math.ceil(8.0 * math.log(2.0 / kappa) / gap ** 2)


@dataclass
class NoiseOracle:
    """One evaluation interface over the three strategies.

    Exact modes are white-box: they need the target formula. Sampled mode
    uses the membership oracle and accounts every query and sample.
    """

    mode: str = "exact_ie"  # exact_enum | exact_ie | sampled
    target: Dnf = None
    samples: int = None
    kappa: float = 1e-3
    seed: int = 0
    eval_count: int = 0
    sample_count: int = 0

    def __post_init__(self):
        if self.mode not in ("exact_enum", "exact_ie", "sampled"):
            raise ValueError(f"unknown noise oracle mode {self.mode!r}")
        if self.mode != "sampled" and self.target is None:
            raise ValueError("exact noise oracles need the target formula")

    @property
    def is_exact(self) -> bool:
        return self.mode != "sampled"

    def restricted_evaluator(self, stem: Term, mq, profile: ScaleProfile):
        """Callable x -> estimate of the noised restricted value at x, with
        noise only over the coordinates not fixed by the stem."""
        rho = profile.rho
        if self.is_exact:
            fr = restrict(self.target, stem)
            fn = noise_exact_enum if self.mode == "exact_enum" else noise_exact_ie

            def value(x: Assignment) -> float:
                self.eval_count += 1
                return fn(fr, x, rho)

            return value

        n_samples = self.samples or default_sample_count(profile.gap, self.kappa)
        stem_idx = stem.indices()

        def value(x: Assignment) -> float:
            self.eval_count += 1
            self.sample_count += n_samples
            free = [i for i in range(1, x.n + 1) if i not in stem_idx]
            rng = np.random.default_rng([self.seed, x.bits])
            return noise_sampled(mq, x, rho, n_samples, rng, free)

        return value


# ---------------------------------------------------------------------------
# Relevant-variable discovery


@dataclass(frozen=True)
class RelevantVarOutcome:
    updated: bool
    index: int = None
    witness: Assignment = None  # the point just before the jump
    delta: float = None

    @staticmethod
    def fail() -> "RelevantVarOutcome":
        return RelevantVarOutcome(False)


def find_relevant_variable(mq, stem: Term, R: frozenset, y: Assignment,
                           z: Assignment, profile: ScaleProfile,
                           oracle: NoiseOracle) -> RelevantVarOutcome:
    """Line search from z toward the hybrid of (z on R, y off R), flipping
    differing coordinates one at a time in ascending order; returns the
    first coordinate whose flip raises the noised restricted value by at
    least the profile gap, or Fail."""
    if eval_term(stem, y) != 1 or eval_term(stem, z) != 1:
        raise ValueError("both endpoints must satisfy the stem")
    if R & stem.indices():
        raise ValueError("R must be disjoint from the stem's variables")
    z1 = hybrid(z, y, R)
    coords = [i for i in range(1, z.n + 1) if z.bit(i) != z1.bit(i)]
    if not coords:
        return RelevantVarOutcome.fail()
    value = oracle.restricted_evaluator(stem, mq, profile)
    gap = profile.gap
    a = z
    prev = value(a)
    for c in coords:
        b = a.flip(c)
        cur = value(b)
        if cur >= prev + gap:
            return RelevantVarOutcome(True, index=c, witness=a, delta=cur - prev)
        a, prev = b, cur
    return RelevantVarOutcome.fail()


def morally_relevant_indices(f: Dnf, profile: ScaleProfile) -> set:
    """Indices appearing in some term of length at most the medium cutoff."""
    low, _ = split_by_length(f, profile.medium_cutoff)
    out = set()
    for t in low.terms:
        out |= t.indices()
    return out


# ---------------------------------------------------------------------------
# Claim-level checks


def _exact_fn(f: Dnf, mode: str):
    if mode == "auto":
        mode = "exact_enum" if len(f.free_indices()) <= 16 else "exact_ie"
    return (noise_exact_enum if mode == "exact_enum" else noise_exact_ie), mode


def _random_assignment(n: int, rng) -> Assignment:
    bits = int.from_bytes(rng.bytes((n + 7) // 8), "big") % (1 << n)
    return Assignment(n, bits)


def _random_point_satisfying(t: Term, n: int, rng) -> Assignment:
    a = _random_assignment(n, rng)
    for l in t.literals:
        if a.bit(l.index) != int(l.positive):
            a = a.flip(l.index)
    return a


def check_noise_claims(f: Dnf, profile: ScaleProfile, mode: str = "auto",
                       seed: int = 0, max_points: int = 100) -> dict:
    """Exact pointwise checks of the three noise-stability bounds computed
    from the profile:

    * positive: a point satisfying a short term has noised value at least
      1 - tau*(1-rho) = 0.9;
    * negative: a point satisfying no short or medium term has noised value
      at most 0.01 + k*rho^medium_cutoff + (1 - rho^k);
    * flip: flipping indices that appear only in long terms moves the
      noised value by at most 2k*rho^medium_cutoff.
    """
    rng = np.random.default_rng(seed)
    fn, used_mode = _exact_fn(f, mode)
    rho = profile.rho
    n = f.n
    short, _ = split_by_length(f, profile.tau)
    medium, _ = split_by_length(f, profile.medium_cutoff)
    report = {"mode": used_mode, "checks": {}}

    def run_check(name, points, bound, value, sense):
        worst = None
        worst_pt = None
        for p in points:
            v = value(p)
            keyv = -v if sense == "lower" else v
            if worst is None or keyv > worst:
                worst, worst_pt = keyv, p
        entry = {"bound": bound, "points": len(points)}
        if worst is None:
            entry["pass"] = True
            entry["worst"] = None
        else:
            w = -worst if sense == "lower" else worst
            entry["worst"] = w
            entry["witness"] = str(worst_pt)
            entry["pass"] = bool(w >= bound - 1e-12 if sense == "lower"
                                 else w <= bound + 1e-12)
        report["checks"][name] = entry

    # points satisfying a short term
    pos_pts = []
    if n <= 16:
        from .tables import dnf_truth_table
        tab = dnf_truth_table(short)
        pos_pts = [Assignment(n, int(b)) for b in np.nonzero(tab)[0][:max_points]]
    else:
        for t in short.terms:
            for _ in range(max(1, max_points // max(short.k, 1))):
                pos_pts.append(_random_point_satisfying(t, n, rng))
    run_check("short_term_noised_lower", pos_pts, profile.claim_pos_bound(),
              lambda p: fn(f, p, rho), "lower")

    # points satisfying no short or medium term
    neg_pts = []
    if n <= 16:
        from .tables import dnf_truth_table
        tab = dnf_truth_table(medium) if medium.k else np.zeros(1 << n, np.uint8)
        neg_pts = [Assignment(n, int(b)) for b in np.nonzero(tab == 0)[0][:max_points]]
    else:
        tries = 0
        while len(neg_pts) < max_points and tries < 20 * max_points:
            tries += 1
            p = _random_assignment(n, rng)
            if not any(eval_term(t, p) for t in medium.terms):
                neg_pts.append(p)
    run_check("long_only_noised_upper", neg_pts, profile.claim_neg_bound(),
              lambda p: fn(f, p, rho), "upper")

    # flips over morally irrelevant indices
    relevant = morally_relevant_indices(f, profile)
    irrelevant = [i for i in range(1, n + 1) if i not in relevant]
    flip_pts = []
    if irrelevant:
        for _ in range(max_points):
            p = _random_assignment(n, rng)
            size = int(rng.integers(1, len(irrelevant) + 1))
            S = rng.choice(irrelevant, size=size, replace=False)
            flip_pts.append((p, tuple(int(i) for i in S)))

    def flip_delta(pt):
        p, S = pt
        q = p
        for i in S:
            q = q.flip(i)
        return abs(fn(f, p, rho) - fn(f, q, rho))

    run_check("irrelevant_flip_upper", flip_pts, profile.claim_flip_bound(),
              flip_delta, "upper")
    report["ok"] = all(c["pass"] for c in report["checks"].values())
    return report


def noise_claims_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True)
