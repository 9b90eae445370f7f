"""The full query-learning loop, its budgets, and the clause baseline."""

import json
import math

import numpy as np
import pytest

from dnflearn.booleans import Dnf, ScaleProfile, Term
from dnflearn.learner import (
    LearnerConfig,
    kappa_schedule,
    learn_dnf,
    learn_kcnf_baseline,
    mmax,
)
from dnflearn.stems import StemFinderConfig
from dnflearn.tables import dnf_truth_table
from dnflearn.teacher import Teacher

from conftest import random_dnf


def _cfg(k, **kw):
    kw.setdefault("profile", ScaleProfile.desk(k))
    kw.setdefault("noise_mode", "exact_ie")
    return LearnerConfig(**kw)


# ---------------------------------------------------------------------------
# Configuration and budget formulas


def test_config_validation():
    prof = ScaleProfile.desk(2)
    with pytest.raises(ValueError):
        LearnerConfig(profile=prof, kappa=0.0)
    with pytest.raises(ValueError):
        LearnerConfig(profile=prof, cap_policy="adaptive")
    with pytest.raises(ValueError):
        LearnerConfig(profile=prof, cap_policy="explicit")  # missing cap


def test_mmax_policies():
    cfg = _cfg(2, cap_policy="explicit", explicit_cap=37)
    assert mmax(cfg, fcs_bound=100, n=10, k=2) == 37
    cfg = _cfg(2, cap_policy="scaled", c0=4.0, w_est=4.0)
    bits = math.ceil(math.log2(10)) + math.ceil(math.log2(33))
    assert mmax(cfg, 100, n=10, k=2, feature_count=32) == math.ceil(64.0 * bits)
    cfg = _cfg(2, cap_policy="paper")
    # exponent ceil(log2 2)^3 = 1: factor * ceil(log2 n)
    expect = math.ceil(1000 / (10 * math.log2(10))) * 4
    assert mmax(cfg, 1000, n=10, k=2) == expect
    with pytest.raises(ValueError):
        mmax(cfg, 0, n=10, k=2)


def test_mmax_paper_policy_survives_float_overflow():
    cfg = _cfg(8, cap_policy="paper")
    cap = mmax(cfg, fcs_bound=10 ** 9, n=20, k=8)
    assert isinstance(cap, int) and cap > 10 ** 50


def test_kappa_schedule_union_bound():
    cfg = _cfg(2, kappa=0.02)
    assert kappa_schedule(cfg, 100) == pytest.approx(2e-4)
    with pytest.raises(ValueError):
        kappa_schedule(cfg, 0)


# ---------------------------------------------------------------------------
# End-to-end learning, exact noise oracle


def test_learns_small_targets_exactly(rng):
    for _ in range(8):
        f = random_dnf(8, 2, rng)
        teacher = Teacher(f)
        report = learn_dnf(teacher, _cfg(2))
        assert report.kind == "Learned"
        assert np.array_equal(report.hypothesis.truth_table(8),
                              dnf_truth_table(f))
        assert report.magic_moments <= 2


def test_learns_long_term_target_via_stem_harvest(rng):
    # one term of length n-1 forces the stem machinery (k=1, slack 2)
    f = random_dnf(12, 1, rng, lengths=[11])
    report = learn_dnf(Teacher(f), _cfg(1, seed=4))
    assert report.kind == "Learned"
    assert report.magic_moments == 1
    assert report.stems_found >= 1
    assert np.array_equal(report.hypothesis.truth_table(12), dnf_truth_table(f))


def test_constant_false_target_learned_at_first_eq():
    report = learn_dnf(Teacher(Dnf(6)), _cfg(1))
    assert report.kind == "Learned"
    assert report.eq_total == 1 and report.mq_total == 0
    assert report.mistakes == 0


def test_exact_noise_mode_bypasses_failure_budget(rng):
    f = random_dnf(8, 2, rng, lengths=[3, 5])
    report = learn_dnf(Teacher(f), _cfg(2))
    assert report.kappa_bypassed is True
    assert report.noise_samples == 0
    assert report.kappa_per_call is not None  # still recorded


def test_sampled_noise_mode_accounts_samples(rng):
    f = random_dnf(8, 2, rng, lengths=[7, 6])
    cfg = _cfg(2, noise_mode="sampled", noise_samples=128, seed=2)
    report = learn_dnf(Teacher(f), cfg)
    assert report.kappa_bypassed is False
    if report.noise_evals:
        assert report.noise_samples == 128 * report.noise_evals


def test_restart_guardrail_produces_incomplete(rng):
    f = random_dnf(10, 2, rng, lengths=[9, 8])
    cfg = _cfg(2, max_restarts=0, cap_policy="explicit", explicit_cap=2)
    report = learn_dnf(Teacher(f), cfg)
    assert report.kind == "Incomplete"
    assert "guardrail" in report.reason
    assert report.hypothesis is None


def test_wall_time_guardrail(rng):
    f = random_dnf(12, 3, rng, lengths=[11, 10, 9])
    cfg = _cfg(3, max_seconds=0.0, cap_policy="explicit", explicit_cap=1)
    report = learn_dnf(Teacher(f), cfg)
    assert report.kind == "Incomplete"
    assert "wall-time" in report.reason


def test_audit_mode_records_verdicts(rng):
    f = random_dnf(10, 2, rng, lengths=[9, 4])
    report = learn_dnf(Teacher(f), _cfg(2, audit=True, seed=1))
    assert report.kind == "Learned"
    assert report.audit_verdicts["exhaustive_equivalence"] is True
    for v in report.audit_verdicts.get("magic_moments", []):
        assert v["new_stems"] >= 0


def test_report_serialization_roundtrip(rng):
    f = random_dnf(8, 2, rng)
    report = learn_dnf(Teacher(f), _cfg(2))
    blob = json.loads(report.to_json())
    assert blob["kind"] == "Learned"
    assert blob["mistakes"] == report.mistakes
    assert blob["caps"] == report.caps
    assert set(blob["per_phase"]) <= {"mq:init", "eq:init", "mq:winnow",
                                      "eq:winnow", "mq:relvar", "eq:relvar",
                                      "mq:stems", "eq:stems"}


def test_determinism_same_seed_same_transcript(rng):
    f = random_dnf(10, 2, rng, lengths=[9, 5])
    reports = [learn_dnf(Teacher(f), _cfg(2, seed=7)) for _ in range(2)]
    a, b = (json.loads(r.to_json()) for r in reports)
    a.pop("wall_time"), b.pop("wall_time")
    assert a == b


def test_caps_grow_with_feature_count(rng):
    f = random_dnf(12, 1, rng, lengths=[11])
    report = learn_dnf(Teacher(f), _cfg(1, seed=3))
    assert report.kind == "Learned"
    assert len(report.caps) >= 2
    assert report.caps[-1] >= report.caps[0]


# ---------------------------------------------------------------------------
# Clause-conjunction baseline


def test_baseline_learns_small_dnfs_exactly(rng):
    for _ in range(10):
        k = int(rng.integers(1, 3))
        f = random_dnf(8, k, rng)
        teacher = Teacher(f)
        h = learn_kcnf_baseline(teacher, k)
        assert np.array_equal(h.truth_table(8), dnf_truth_table(f))
        assert teacher.stats().mq_count == 0  # equivalence queries only


def test_baseline_constant_false_target():
    h = learn_kcnf_baseline(Teacher(Dnf(5)), 1)
    assert not h.truth_table(5).any()


def test_baseline_constant_true_target():
    f = Dnf(5, (Term(frozenset()),))
    h = learn_kcnf_baseline(Teacher(f), 1)
    assert h.truth_table(5).all()


def test_baseline_feature_budget_guard():
    with pytest.raises(ValueError):
        learn_kcnf_baseline(Teacher(Dnf(20, (Term.of(1),)), n_cap=26), 4,
                            feature_budget=1000)


def test_baseline_flags_non_cnf_representable_width():
    # parity-like: x1 xor x2 needs width-2 clauses; width-1 CNF cannot
    # express it, so the run must end in an invariant violation
    f = Dnf(2, (Term.of(1, -2), Term.of(-1, 2)))
    with pytest.raises(AssertionError):
        learn_kcnf_baseline(Teacher(f), 1)


def test_learner_and_baseline_agree_pointwise(rng):
    for _ in range(5):
        f = random_dnf(8, 2, rng)
        t1, t2 = Teacher(f), Teacher(f)
        report = learn_dnf(t1, _cfg(2, seed=5))
        h2 = learn_kcnf_baseline(t2, 2)
        assert report.kind == "Learned"
        assert np.array_equal(report.hypothesis.truth_table(8),
                              h2.truth_table(8))
