"""MQ/EQ teacher: counterexample policies, accounting, transcripts."""

import json

import numpy as np
import pytest

from dnflearn.booleans import Assignment, Dnf, Term, eval_dnf
from dnflearn.tables import dnf_truth_table
from dnflearn.teacher import (
    ConstantHypothesis,
    CounterexamplePolicy,
    QueryLog,
    TableHypothesis,
    Teacher,
)

from conftest import random_dnf

TARGET = Dnf(4, (Term.of(1, 2), Term.of(-3, 4)))


def test_mq_matches_target():
    t = Teacher(TARGET)
    for bits in range(16):
        x = Assignment(4, bits)
        assert t.mq(x) == eval_dnf(TARGET, x)
    assert t.stats().mq_count == 16


def test_mq_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        Teacher(TARGET).mq(Assignment(5, 0))


def test_eq_correct_hypothesis_returns_none():
    t = Teacher(TARGET)
    assert t.eq(TableHypothesis(dnf_truth_table(TARGET))) is None
    assert t.stats().eq_count == 1


def test_eq_lex_min_policy_returns_first_disagreement():
    t = Teacher(TARGET)
    cx = t.eq(ConstantHypothesis(0))
    # the lexicographically smallest positive point of the target
    table = dnf_truth_table(TARGET)
    assert cx.bits == int(np.flatnonzero(table)[0])


def test_eq_positive_first_policy_prefers_target_positive_points():
    t = Teacher(TARGET, CounterexamplePolicy("positive_first_lex"))
    # hypothesis wrong everywhere: complement of the target
    comp = 1 - dnf_truth_table(TARGET)
    cx = t.eq(TableHypothesis(comp))
    assert t.mq(cx) == 1


def test_eq_uniform_random_policy_is_seeded_and_valid():
    picks = set()
    for rep in range(3):
        t = Teacher(TARGET, CounterexamplePolicy("uniform_random", seed=7))
        cx = t.eq(ConstantHypothesis(0))
        picks.add(cx.bits)
        assert eval_dnf(TARGET, cx) == 1  # disagreement with constant 0
    assert len(picks) == 1  # same seed, same pick


def test_policy_rejects_unknown_kind():
    with pytest.raises(ValueError):
        CounterexamplePolicy("adversarial")


def test_callable_hypothesis_supported():
    t = Teacher(TARGET)
    assert t.eq(lambda x: eval_dnf(TARGET, x)) is None


def test_constant_false_target_first_eq_yields_positive_point():
    # the constant-1 hypothesis against constant-false target gives any point
    t = Teacher(Dnf(4))
    cx = t.eq(ConstantHypothesis(1))
    assert cx is not None and t.mq(cx) == 0


def test_n_cap_enforced():
    with pytest.raises(ValueError):
        Teacher(Dnf(27, (Term.of(1),)))


def test_phase_accounting():
    t = Teacher(TARGET)
    with t.log.phase("alpha"):
        t.mq(Assignment(4, 0))
        t.mq(Assignment(4, 1))
        with t.log.phase("beta"):
            t.eq(ConstantHypothesis(0))
    t.mq(Assignment(4, 2))
    counts = t.stats().phase_counts()
    assert counts == {"eq:beta": 1, "mq:alpha": 2}
    assert t.stats().mq_count == 3


def test_bulk_mq_handle_charges_lookups():
    t = Teacher(TARGET)
    table, charge = t.bulk_mq_handle()
    assert np.array_equal(table, dnf_truth_table(TARGET))
    charge(37)
    assert t.stats().mq_count == 37


def test_transcript_jsonl_is_parseable_and_disables_bulk_path():
    t = Teacher(TARGET, transcript=True)
    assert t.bulk_mq_handle() is None
    t.mq(Assignment(4, 5))
    t.eq(ConstantHypothesis(0))
    lines = t.log.transcript_jsonl().strip().split("\n")
    recs = [json.loads(l) for l in lines]
    assert recs[0]["kind"] == "mq" and recs[0]["input"] == "0101"
    assert recs[1]["kind"] == "eq"


def test_table_hypothesis_eval_matches_table(rng):
    f = random_dnf(6, 3, rng)
    h = TableHypothesis(dnf_truth_table(f))
    for bits in range(64):
        assert h.eval(Assignment(6, bits)) == eval_dnf(f, Assignment(6, bits))
