"""Membership-query stem search.

``generate_candidate_stem`` reads off the literals whose single-bit flips
falsify the target at a positive point.  ``find_candidate_stems`` wraps it in
a randomized flipping walk over a uniformly permuted coordinate order and
collects every candidate that the starting point satisfies.  ``audit_walk``
replays an instrumented walk white-box against the hidden target and checks
the structural invariants that make the search work.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .booleans import (Assignment, Dnf, Literal, ScaleProfile, Term,
                       eval_term, is_valid_stem, protected_set,
                       satisfied_terms, strip_terms, unanimous_indices)
from .chebptf import EligiblePair
from .tables import term_from_mask_val


@dataclass(frozen=True)
class StemFinderConfig:
    """reps = None means the default budget ceil(4 * 2^(sqrt(k)*log2(k+1)))
    * ceil(log2 n), computed per call."""

    reps: int = None
    seed: int = 0

    def __post_init__(self):
        if self.reps is not None and self.reps < 1:
            raise ValueError("reps must be at least 1")

    def effective_reps(self, k: int, n: int) -> int:
        if self.reps is not None:
            return self.reps
        base = math.ceil(4.0 * 2.0 ** (math.sqrt(k) * math.log2(k + 1)))
        return base * max(1, math.ceil(math.log2(max(n, 2))))

    def fcs_max(self, k: int, n: int) -> int:
        """Cap on the number of candidates one call may output (before
        dedup): one candidate per stem generation."""
        return self.effective_reps(k, n) * (n + 1)


def generate_candidate_stem(mq, y: Assignment) -> EligiblePair:
    """Candidate stem at a positive point y: the literals of y whose flip
    falsifies the target.  Uses exactly n membership queries.  The caller
    certifies mq(y) = 1; this is not re-queried.
    """
    lits = []
    for i in range(1, y.n + 1):
        if mq(y.flip(i)) == 0:
            lits.append(Literal(i, bool(y.bit(i))))
    return EligiblePair(Term(frozenset(lits)), frozenset())


@dataclass(frozen=True)
class WalkStep:
    index: int              # step i, 0..n
    zbits: int              # z_i (packed)
    candidate: Term         # raw output of the stem generator at z_i
    kept: bool              # candidate satisfied by y, hence emitted
    flip_coord: int = None  # pi(i); None at the final step
    flipped: bool = None    # whether the flip was taken; None at final step


@dataclass(frozen=True)
class WalkTrace:
    y: Assignment
    permutation: tuple      # coordinates in consideration order, len n
    steps: tuple            # n+1 WalkStep entries


def run_walk(mq, y: Assignment, permutation) -> WalkTrace:
    """One instrumented repetition of the stem-finding walk."""
    n = y.n
    perm = tuple(int(c) for c in permutation)
    if sorted(perm) != list(range(1, n + 1)):
        raise ValueError("permutation must cover [1..n]")
    z = y
    steps = []
    for i in range(n + 1):
        cand = generate_candidate_stem(mq, z).stem
        kept = eval_term(cand, y) == 1
        if i < n:
            c = perm[i]
            flipped = mq(z.flip(c)) == 1
            steps.append(WalkStep(i, z.bits, cand, kept, c, flipped))
            if flipped:
                z = z.flip(c)
        else:
            steps.append(WalkStep(i, z.bits, cand, kept))
    return WalkTrace(y, perm, tuple(steps))


def find_candidate_stems(oracle, y: Assignment, cfg: StemFinderConfig,
                         profile: ScaleProfile) -> list:
    """Randomized stem search from a positive point.

    ``oracle`` is a Teacher (enables the compiled bulk path) or a membership
    callable on Assignments.  Returns eligible pairs (stem, empty R),
    deduplicated by stem equality in first-occurrence order; every stem is
    satisfied by y.
    """
    n = y.n
    reps = cfg.effective_reps(profile.k, n)
    rng = np.random.default_rng(cfg.seed)
    perms = np.stack([rng.permutation(n) + 1 for _ in range(reps)])

    handle = getattr(oracle, "bulk_mq_handle", lambda: None)()
    if handle is not None:
        from . import kern
        table, charge = handle
        flipbits = (np.uint64(1) << (np.uint64(n) - perms.astype(np.uint64)))
        masks, vals = kern.stem_walks(table, n, y.bits, flipbits)
        charge(reps * (n * (n + 1) + n))
        seen = {}
        for m, v in zip(masks.tolist(), vals.tolist()):
            if (m, v) not in seen:
                seen[(m, v)] = term_from_mask_val(n, m, v)
        return [EligiblePair(t, frozenset()) for t in seen.values()]

    mq = oracle.mq if hasattr(oracle, "mq") else oracle
    seen = {}
    for r in range(reps):
        trace = run_walk(mq, y, perms[r])
        for step in trace.steps:
            if step.kept and step.candidate not in seen:
                seen[step.candidate] = None
    return [EligiblePair(t, frozenset()) for t in seen]


# ---------------------------------------------------------------------------
# White-box walk audit


#: human-readable tags for the structural invariants checked on each walk
CHECKS = {
    "a": "satisfied-term-set monotone under conditioning",
    "b": "flipped coordinates absent from satisfied terms",
    "c": "stripped-literal indices unseen by the permutation so far",
    "d": "stripped-literal index set non-increasing",
    "e": "flipping an unprotected unanimous index falsifies the target",
    "f": "short stripped term forces a valid emitted stem",
}


@dataclass
class AuditReport:
    violations: list = field(default_factory=list)
    conditioning_broken_at: int = None
    steps_checked: int = 0

    def ok(self) -> bool:
        return not self.violations

    def add(self, check: str, step: int, detail: str):
        self.violations.append({"check": check, "name": CHECKS[check],
                                "step": step, "detail": detail})

    def to_json(self) -> str:
        return json.dumps({
            "ok": self.ok(),
            "steps_checked": self.steps_checked,
            "conditioning_broken_at": self.conditioning_broken_at,
            "violations": self.violations,
        }, sort_keys=True)


def audit_walk(f: Dnf, trace: WalkTrace, profile: ScaleProfile) -> AuditReport:
    """Check the walk invariants on every prefix of the walk during which no
    protected coordinate of the start point has been flipped.  The checks
    use the hidden target; this is a test/audit facility only.
    """
    y = trace.y
    if y.n != f.n:
        raise ValueError("trace and target dimensions differ")
    n = y.n
    report = AuditReport()
    prot = protected_set(f, y)
    k = f.k

    prev_sat = None
    prev_stripped = None
    flipped_coords = []
    for step in trace.steps:
        z = Assignment(n, step.zbits)
        # conditioning: z_i agrees with y on the protected set
        if any(z.bit(a) != y.bit(a) for a in prot):
            report.conditioning_broken_at = step.index
            break
        report.steps_checked += 1
        sat = satisfied_terms(f, z)
        sat_terms = [f.terms[i] for i in sat]
        if not sat_terms:
            report.add("a", step.index, "walk point does not satisfy the target")
            break
        uni = unanimous_indices(sat_terms)
        stripped = strip_terms(sat_terms, prot | uni)
        seen_coords = set(trace.permutation[:step.index])

        if prev_sat is not None and not sat <= prev_sat:
            report.add("a", step.index,
                       f"satisfied set grew: {sorted(sat - prev_sat)}")
        for j in flipped_coords:
            for t in sat_terms:
                if j in t.indices():
                    report.add("b", step.index,
                               f"flipped coordinate {j} appears in a satisfied term")
        for t in stripped:
            for j in t.indices():
                if j in seen_coords:
                    report.add("c", step.index,
                               f"stripped index {j} already appeared in the permutation")
        stripped_idx = set().union(*(t.indices() for t in stripped)) if stripped else set()
        if prev_stripped is not None and not stripped_idx <= prev_stripped:
            report.add("d", step.index,
                       f"stripped index set grew: {sorted(stripped_idx - prev_stripped)}")
        for j in sorted(uni - prot):
            if satisfied_terms(f, z.flip(j)):
                report.add("e", step.index,
                           f"flipping unanimous index {j} keeps the target true")
        if any(len(t) <= k for t in stripped):
            cand = step.candidate
            witnessed = any(eval_term(t, y) and is_valid_stem(cand, t, profile.stem_slack)
                            for t in f.terms)
            if not witnessed:
                report.add("f", step.index,
                           "short stripped term present but emitted candidate "
                           "is not a valid stem of any term satisfied by y")

        prev_sat = sat
        prev_stripped = stripped_idx
        if step.flipped:
            flipped_coords.append(step.flip_coord)
    return report
