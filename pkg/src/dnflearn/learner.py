"""End-to-end exact learner: alternate Winnow runs with feature-catalog
growth.

Negative counterexamples drive relevant-variable discovery (growing the R of
an existing (stem, R) pair); hitting the mistake cap without any growth
triggers a stem search from every positive counterexample of the current run.
The module also provides the union-bound failure budget for sampled noise
estimation and an independent clause-elimination baseline learner used for
cross-validation.
"""

import json
import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .booleans import Assignment, Dnf, ScaleProfile, Term, eval_term
from .chebptf import FeatureCatalog
from .noise import NoiseOracle, find_relevant_variable
from .stems import StemFinderConfig, find_candidate_stems
from .tables import conj_table, dnf_truth_table
from .teacher import ConstantHypothesis, TableHypothesis
from .winnow import CatalogFeatureSpace, winnow_run

__all__ = [
    "LearnerConfig", "LearnerState", "RunReport", "mmax", "kappa_schedule",
    "learn_dnf", "learn_kcnf_baseline",
]


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class LearnerConfig:
    """Everything a learning run needs besides the teacher.

    cap_policy selects the per-run mistake cap: "scaled" (default) computes
    c0 * w_est^2 * (ceil(log2 n) + ceil(log2(feature count + 1))) from the
    live catalog — the empirical mistake-bound shape, which keeps the
    cap-exceeded rounds that trigger stem harvesting cheap; "paper" evaluates
    the display formula (FCS_max / (n log2 n))^ceil(log2 k)^3 * ceil(log2 n),
    which explodes at realistic sizes and exists for shape testing; "explicit"
    returns explicit_cap verbatim.
    """

    profile: ScaleProfile
    stem_cfg: StemFinderConfig = StemFinderConfig()
    noise_mode: str = "sampled"  # exact_enum | exact_ie | sampled
    cap_policy: str = "scaled"  # scaled | paper | explicit
    explicit_cap: int = None
    c0: float = 4.0
    w_est: float = 4.0
    kappa: float = 0.01
    noise_samples: int = None  # override the Hoeffding default (sampled mode)
    seed: int = 0
    audit: bool = False
    max_restarts: int = None  # None = formula guardrail
    max_seconds: float = None

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")
        if self.cap_policy not in ("scaled", "paper", "explicit"):
            raise ValueError(f"unknown cap policy {self.cap_policy!r}")
        if self.cap_policy == "explicit":
            if self.explicit_cap is None or self.explicit_cap < 1:
                raise ValueError("explicit cap policy needs explicit_cap >= 1")


@dataclass
class LearnerState:
    """Mutable run state: the growing catalog plus counterexample pools."""

    catalog: FeatureCatalog
    allpos: list = field(default_factory=list)  # every positive cx ever seen
    pos: list = field(default_factory=list)  # positives of the current run
    magic_moments: int = 0
    rel_var_updates: int = 0


@dataclass
class RunReport:
    kind: str  # Learned | Incomplete
    hypothesis: object = None
    reason: str = ""
    mistakes: int = 0
    restarts: int = 0
    magic_moments: int = 0
    rel_var_updates: int = 0
    mq_total: int = 0
    eq_total: int = 0
    noise_evals: int = 0
    noise_samples: int = 0
    per_phase: dict = field(default_factory=dict)
    caps: list = field(default_factory=list)
    kappa_per_call: float = None
    kappa_bypassed: bool = False
    expected_noise_calls: int = 0
    catalog_pairs: int = 0
    feature_count: int = 0
    stems_found: int = 0
    pos_sizes: list = field(default_factory=list)
    audit_verdicts: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "reason": self.reason,
            "mistakes": self.mistakes,
            "restarts": self.restarts,
            "magic_moments": self.magic_moments,
            "rel_var_updates": self.rel_var_updates,
            "mq_total": self.mq_total,
            "eq_total": self.eq_total,
            "noise_evals": self.noise_evals,
            "noise_samples": self.noise_samples,
            "per_phase": self.per_phase,
            "caps": self.caps,
            "kappa_per_call": self.kappa_per_call,
            "kappa_bypassed": self.kappa_bypassed,
            "catalog_pairs": self.catalog_pairs,
            "feature_count": self.feature_count,
            "stems_found": self.stems_found,
            "pos_sizes": self.pos_sizes,
            "audit_verdicts": self.audit_verdicts,
            "wall_time": round(self.wall_time, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


# ---------------------------------------------------------------------------
# Mistake cap and failure budget


def mmax(cfg: LearnerConfig, fcs_bound: int, n: int, k: int,
         feature_count: int = 0) -> int:
    """Per-run mistake cap under the configured policy; always >= 1."""
    if fcs_bound <= 0:
        raise ValueError("the stem-output bound must be positive")
    if cfg.cap_policy == "explicit":
        return max(1, int(cfg.explicit_cap))
    if cfg.cap_policy == "scaled":
        bits = math.ceil(math.log2(max(n, 2))) + \
            math.ceil(math.log2(feature_count + 1))
        return max(1, math.ceil(cfg.c0 * cfg.w_est ** 2 * bits))
    # display-formula mode: (FCS / (n log2 n))^ceil(log2 k)^3 * ceil(log2 n)
    log_n = max(1, math.ceil(math.log2(max(n, 2))))
    factor = fcs_bound / (n * math.log2(max(n, 2)))
    exponent = max(0, math.ceil(math.log2(max(k, 1)))) ** 3
    power = factor ** exponent
    if math.isinf(power):
        power = math.ceil(factor) ** exponent  # exact big-int fallback
    return max(1, math.ceil(power) * log_n)


def kappa_schedule(cfg: LearnerConfig, expected_calls: int) -> float:
    """Split the global failure budget evenly across the worst-case number
    of noise-estimation calls (union bound)."""
    if expected_calls < 1:
        raise ValueError("expected_calls must be at least 1")
    return cfg.kappa / expected_calls


# ---------------------------------------------------------------------------
# The main learner


def _guardrail_restarts(cfg: LearnerConfig, k: int, n: int) -> int:
    """Ceiling on restarts before declaring the run Incomplete: each restart
    either grows some R (at most r_max per pair, over a bounded number of
    pairs) or is a stem-adding moment (at most k+1 before the per-term
    argument fails)."""
    if cfg.max_restarts is not None:
        return cfg.max_restarts
    catalog_bound = 1 + k * cfg.stem_cfg.fcs_max(k, n)
    return k * (cfg.profile.r_max * catalog_bound) + k + 1


def learn_dnf(teacher, cfg: LearnerConfig) -> RunReport:
    """Run the full EQ/MQ protocol against the teacher until the hypothesis
    is exactly correct, a resource guardrail fires, or the wall clock runs
    out.  Returns a structured report either way."""
    t0 = time.perf_counter()
    n = teacher.n
    profile = cfg.profile
    k = profile.k
    report = RunReport(kind="Incomplete", reason="unstarted")
    state = LearnerState(catalog=FeatureCatalog(k))
    max_restarts = _guardrail_restarts(cfg, k, n)

    # Failure budget: only sampled noise estimation can err, so the union
    # bound is over the worst-case number of estimator calls.
    fcs_bound = cfg.stem_cfg.fcs_max(k, n)
    first_cap = mmax(cfg, fcs_bound, n, k, feature_count=1)
    expected_calls = max(1, max_restarts * (first_cap + 1))
    per_call_kappa = kappa_schedule(cfg, expected_calls)
    report.expected_noise_calls = expected_calls
    report.kappa_per_call = per_call_kappa
    report.kappa_bypassed = cfg.noise_mode != "sampled"
    if cfg.noise_mode == "sampled":
        noise = NoiseOracle(mode="sampled", samples=cfg.noise_samples,
                            kappa=per_call_kappa, seed=cfg.seed)
    else:
        noise = NoiseOracle(mode=cfg.noise_mode, target=teacher.reveal_target())

    def finish(kind, hypothesis=None, reason=""):
        report.kind = kind
        report.hypothesis = hypothesis
        report.reason = reason
        report.magic_moments = state.magic_moments
        report.rel_var_updates = state.rel_var_updates
        report.catalog_pairs = len(state.catalog.pairs)
        report.feature_count = state.catalog.feature_count()
        report.noise_evals = noise.eval_count
        report.noise_samples = noise.sample_count
        log = teacher.stats()
        report.mq_total = log.mq_count
        report.eq_total = log.eq_count
        report.per_phase = teacher.log.phase_counts()
        report.wall_time = time.perf_counter() - t0
        if kind == "Learned":
            _learned_asserts(teacher, cfg, state, report)
        return report

    # Protocol start: one equivalence query on the constant-false function.
    with teacher.log.phase("init"):
        cx = teacher.eq(ConstantHypothesis(0))
    if cx is None:
        return finish("Learned", ConstantHypothesis(0))
    state.allpos.append(cx)

    stem_call_counter = 0
    while True:
        if report.restarts > max_restarts:
            return finish("Incomplete", reason="restart guardrail exceeded")
        if cfg.max_seconds is not None and \
            time.perf_counter() - t0 > cfg.max_seconds:
            return finish("Incomplete", reason="wall-time guardrail exceeded")

        space = CatalogFeatureSpace(state.catalog, n)
        cap = mmax(cfg, fcs_bound, n, k, feature_count=space.n_features)
        report.caps.append(cap)
        state.pos = []

        def on_positive(z):
            state.pos.append(z)
            state.allpos.append(z)

        def on_negative(z):
            with teacher.log.phase("relvar"):
                for j, pair in enumerate(state.catalog.pairs):
                    if len(pair.R) >= profile.r_max:
                        continue
                    if eval_term(pair.stem, z) != 1:
                        continue
                    y = next((p for p in state.allpos
                              if eval_term(pair.stem, p) == 1), None)
                    if y is None:
                        warnings.warn(
                            "no recorded positive satisfies a catalog stem; "
                            "skipping the pair", stacklevel=2)
                        continue
                    out = find_relevant_variable(
                        teacher.mq, pair.stem, pair.R, y, z, profile, noise)
                    if out.updated:
                        state.catalog.grow_r(j, out.index)
                        assert len(state.catalog.pairs[j].R) <= profile.r_max
                        state.rel_var_updates += 1
                        return True
            return False

        with teacher.log.phase("winnow"):
            ex = winnow_run(teacher, space, cap,
                            on_negative=on_negative, on_positive=on_positive)
        report.mistakes += ex.mistakes
        report.pos_sizes.append(len(state.pos))

        if ex.kind == "learned":
            return finish("Learned", ex.hypothesis)
        if ex.kind == "aborted":
            report.restarts += 1
            continue

        # Mistake cap exceeded with no catalog growth: harvest candidate
        # stems from every positive counterexample of this run.
        pre_stems = {p.stem for p in state.catalog.pairs}
        with teacher.log.phase("stems"):
            for y in state.pos:
                stem_call_counter += 1
                scfg = replace(cfg.stem_cfg,
                               seed=[cfg.stem_cfg.seed, cfg.seed,
                                     stem_call_counter])
                for pair in find_candidate_stems(teacher, y, scfg, profile):
                    if not state.catalog.has_stem(pair.stem):
                        state.catalog.add_pair(pair)
                        report.stems_found += 1
        state.magic_moments += 1
        if cfg.audit:
            _audit_magic_moment(teacher, state, pre_stems, report)
        report.restarts += 1


def _learned_asserts(teacher, cfg: LearnerConfig, state: LearnerState,
                     report: RunReport):
    """Invariants checked on every successful exit; exhaustive re-check and
    white-box verdicts in audit mode."""
    if state.magic_moments > cfg.profile.k:
        raise AssertionError(
            f"{state.magic_moments} stem-harvest rounds on a Learned run "
            f"(cap is k = {cfg.profile.k})")
    # Catalog growth accounting: pairs only enter at stem harvests.
    bound = 1 + sum(report.pos_sizes) * cfg.stem_cfg.fcs_max(
        cfg.profile.k, teacher.n)
    if len(state.catalog.pairs) > bound:
        raise AssertionError("catalog grew beyond the stem-harvest budget")
    if cfg.audit:
        target_table = dnf_truth_table(teacher.reveal_target())
        hyp_table = np.asarray(report.hypothesis.truth_table(teacher.n),
                               dtype=np.uint8)
        equal = bool(np.array_equal(target_table, hyp_table))
        report.audit_verdicts["exhaustive_equivalence"] = equal
        if not equal:
            raise AssertionError("Learned hypothesis fails exhaustive check")


def _audit_magic_moment(teacher, state: LearnerState, pre_stems: set,
                        report: RunReport):
    """White-box check: a stem harvest must cover a previously unwitnessed
    term of the hidden target."""
    from .booleans import is_valid_stem
    target = teacher.reveal_target()
    slack = 2 * target.k
    new_stems = [p.stem for p in state.catalog.pairs
                 if p.stem not in pre_stems]
    covered_new_term = False
    for t in target.terms:
        if any(is_valid_stem(s, t, slack) for s in pre_stems):
            continue
        if any(is_valid_stem(s, t, slack) for s in new_stems):
            covered_new_term = True
            break
    verdicts = report.audit_verdicts.setdefault("magic_moments", [])
    verdicts.append({"round": state.magic_moments + 1,
                     "new_stems": len(new_stems),
                     "covered_new_term": covered_new_term})


# ---------------------------------------------------------------------------
# Independent baseline: clause elimination over bounded-width clauses


def learn_kcnf_baseline(teacher, k: int, feature_budget: int = 10 ** 7):
    """Exact-learn a k-term DNF through its width-k CNF representation.

    Start from every disjunction of at most k literals (including the empty,
    constant-false clause); each positive counterexample deletes the clauses
    it falsifies; the hypothesis is the conjunction of survivors.  Negative
    counterexamples are impossible for a width-k-CNF-representable target,
    so one is reported as an invariant violation.
    """
    n = teacher.n
    count = 1 + sum(math.comb(n, w) * (1 << w) for w in range(1, k + 1))
    if count > feature_budget:
        raise ValueError(f"{count} clauses exceed the budget {feature_budget}")

    # Per-clause table of falsifying points: a clause over literal set L is
    # false exactly where every literal in L is false.
    false_tables = []
    size = 1 << n

    def emit(mask, val):
        false_tables.append(conj_table(n, mask, val))

    emit(0, 0)  # empty clause: false everywhere
    from itertools import combinations, product
    for w in range(1, k + 1):
        for idxs in combinations(range(1, n + 1), w):
            for signs in product((0, 1), repeat=w):
                mask = 0
                val = 0
                for i, s in zip(idxs, signs):
                    bit = 1 << (n - i)
                    mask |= bit
                    # positive literal x_i is false when the bit is 0
                    if s == 0:
                        val |= bit
                emit(mask, val)
    false_at = np.stack(false_tables).astype(bool)
    alive = np.ones(len(false_tables), dtype=bool)

    while True:
        h_table = (~false_at[alive].any(axis=0)).astype(np.uint8) \
            if alive.any() else np.ones(size, dtype=np.uint8)
        cx = teacher.eq(TableHypothesis(h_table))
        if cx is None:
            return TableHypothesis(h_table)
        if h_table[cx.bits]:
            raise AssertionError(
                "negative counterexample against a clause-conjunction "
                "hypothesis: the target is not width-k-CNF representable")
        alive &= ~false_at[:, cx.bits]
