"""Noise-operator evaluation and relevant-variable discovery."""

import math

import numpy as np
import pytest

from dnflearn.booleans import (
    Assignment,
    Dnf,
    Literal,
    ScaleProfile,
    Term,
    eval_dnf,
    restrict,
)
from dnflearn.noise import (
    NoiseOracle,
    RelevantVarOutcome,
    check_noise_claims,
    default_sample_count,
    find_relevant_variable,
    morally_relevant_indices,
    noise_claims_json,
    noise_exact_enum,
    noise_exact_ie,
    noise_sampled,
)
from dnflearn.teacher import Teacher

from conftest import random_dnf


def _mq(f):
    return lambda x: eval_dnf(f, x)


# ---------------------------------------------------------------------------
# The two exact strategies against a hand-computed value and each other


def test_exact_value_single_literal():
    # f = x1 over one variable: T_rho f(1) = rho, T_rho f(0) = 1 - rho
    f = Dnf(1, (Term.of(1),))
    rho = 0.875
    assert noise_exact_enum(f, Assignment(1, 1), rho) == pytest.approx(rho)
    assert noise_exact_enum(f, Assignment(1, 0), rho) == pytest.approx(1 - rho)
    assert noise_exact_ie(f, Assignment(1, 1), rho) == pytest.approx(rho)


def test_exact_value_two_term_hand_computation():
    # f = x1 OR x2: T_rho f(11) = 1 - (1-rho)^2 by inclusion-exclusion
    f = Dnf(2, (Term.of(1), Term.of(2)))
    rho = 0.9
    expect = 2 * rho - rho * rho
    assert noise_exact_enum(f, Assignment(2, 3), rho) == pytest.approx(expect)
    assert noise_exact_ie(f, Assignment(2, 3), rho) == pytest.approx(expect)


def test_enum_and_ie_agree_on_random_instances(rng):
    for _ in range(30):
        f = random_dnf(10, 3, rng)
        x = Assignment(10, int(rng.integers(0, 1 << 10)))
        rho = float(rng.uniform(0.5, 0.999))
        a = noise_exact_enum(f, x, rho)
        b = noise_exact_ie(f, x, rho)
        assert abs(a - b) <= 1e-12


def test_exact_respects_pinned_coordinates(rng):
    # after restriction, pinned coordinates are never perturbed: value at a
    # consistent point equals the noised value of the restricted function
    f = Dnf(6, (Term.of(1, 2, 3), Term.of(-1, 4)))
    g = restrict(f, Term.of(1))
    x = Assignment.from_string("111000")
    rho = 0.9
    a = noise_exact_enum(g, x, rho)
    b = noise_exact_ie(g, x, rho)
    assert a == pytest.approx(b, abs=1e-12)
    # with x1 pinned true, the second term is dead; value = noised x2&x3
    h = Dnf(6, (Term.of(2, 3),), pinned=((1, 1),))
    assert a == pytest.approx(noise_exact_enum(h, x, rho), abs=1e-12)


def test_ie_handles_contradicting_term_unions():
    f = Dnf(3, (Term.of(1, 2), Term.of(-1, 3)))
    x = Assignment.from_string("110")
    assert noise_exact_ie(f, x, 0.8) == pytest.approx(noise_exact_enum(f, x, 0.8))


def test_exact_guards():
    with pytest.raises(ValueError):
        noise_exact_enum(Dnf(30, (Term.of(1),)), Assignment(30, 0), 0.9)
    with pytest.raises(ValueError):
        noise_exact_ie(Dnf(25, tuple(Term.of(i) for i in range(1, 22))),
                       Assignment(25, 0), 0.9)


# ---------------------------------------------------------------------------
# Sampling


def test_sampled_is_deterministic_and_concentrates(rng):
    f = random_dnf(8, 2, rng, lengths=[3, 2])
    x = Assignment(8, int(rng.integers(0, 256)))
    rho = 0.9
    gen1 = np.random.default_rng(42)
    gen2 = np.random.default_rng(42)
    a = noise_sampled(_mq(f), x, rho, 4000, gen1)
    b = noise_sampled(_mq(f), x, rho, 4000, gen2)
    assert a == b
    exact = noise_exact_enum(f, x, rho)
    assert abs(a - exact) < 0.05


def test_default_sample_count_hoeffding_shape():
    # halving the gap quadruples the budget; kappa enters logarithmically
    assert default_sample_count(0.05, 1e-3) == math.ceil(8 * math.log(2000) / 0.05 ** 2)
    assert default_sample_count(0.025, 1e-3) == pytest.approx(
        4 * default_sample_count(0.05, 1e-3), rel=0.01)


def test_noise_oracle_validation_and_accounting(rng):
    with pytest.raises(ValueError):
        NoiseOracle(mode="montecarlo")
    with pytest.raises(ValueError):
        NoiseOracle(mode="exact_ie")  # needs target
    f = random_dnf(8, 2, rng, lengths=[4, 3])
    prof = ScaleProfile.desk(2)
    oracle = NoiseOracle(mode="exact_ie", target=f)
    assert oracle.is_exact
    value = oracle.restricted_evaluator(Term(), _mq(f), prof)
    value(Assignment(8, 0))
    assert oracle.eval_count == 1 and oracle.sample_count == 0


def test_noise_oracle_sampled_counts_queries(rng):
    f = random_dnf(8, 2, rng, lengths=[4, 3])
    prof = ScaleProfile.desk(2)
    t = Teacher(f)
    oracle = NoiseOracle(mode="sampled", samples=256, seed=5)
    value = oracle.restricted_evaluator(Term(), t.mq, prof)
    x = Assignment(8, 0)
    v1 = value(x)
    v2 = value(x)
    assert v1 == v2  # seeded per evaluation point
    assert oracle.eval_count == 2 and oracle.sample_count == 512
    assert t.stats().mq_count == 512


def test_sampled_evaluator_tracks_exact(rng):
    f = random_dnf(8, 2, rng, lengths=[3, 3])
    prof = ScaleProfile.desk(2)
    exact = NoiseOracle(mode="exact_enum", target=f)
    approx = NoiseOracle(mode="sampled", samples=6000, seed=1)
    stem = Term(frozenset())
    ve = exact.restricted_evaluator(stem, _mq(f), prof)
    vs = approx.restricted_evaluator(stem, _mq(f), prof)
    for bits in (0, 17, 200):
        x = Assignment(8, bits)
        assert abs(ve(x) - vs(x)) < 0.05


# ---------------------------------------------------------------------------
# Relevant-variable discovery


def _relvar_instance():
    # target x1&x2&x3 restricted by stem x1; y satisfies the term, z kills
    # x2 and x3; walking z toward hybrid(z, y, R={}) flips them back on.
    f = Dnf(6, (Term.of(1, 2, 3),))
    y = Assignment.from_string("111000")
    z = Assignment.from_string("100000")
    return f, Term.of(1), y, z


def test_find_relevant_variable_exact_finds_term_variable():
    f, stem, y, z = _relvar_instance()
    prof = ScaleProfile.desk(1)
    oracle = NoiseOracle(mode="exact_ie", target=f)
    out = find_relevant_variable(_mq(f), stem, frozenset(), y, z, prof, oracle)
    assert out.updated
    assert out.index in {2, 3}
    assert out.delta >= prof.gap


def test_find_relevant_variable_fail_when_no_jump():
    # constant-true restriction: no coordinate can move the value
    f = Dnf(4, (Term.of(1),))
    stem = Term.of(1)
    y = Assignment.from_string("1011")
    z = Assignment.from_string("1100")
    oracle = NoiseOracle(mode="exact_ie", target=f)
    out = find_relevant_variable(_mq(f), stem, frozenset(), y, z,
                                 ScaleProfile.desk(1), oracle)
    assert out == RelevantVarOutcome.fail()


def test_find_relevant_variable_respects_r_freeze():
    f, stem, y, z = _relvar_instance()
    oracle = NoiseOracle(mode="exact_ie", target=f)
    # with R = {2,3} the hybrid equals z off-stem, so there is nothing to flip
    out = find_relevant_variable(_mq(f), stem, frozenset({2, 3}), y, z,
                                 ScaleProfile.desk(1), oracle)
    assert not out.updated


def test_find_relevant_variable_input_validation():
    f, stem, y, z = _relvar_instance()
    oracle = NoiseOracle(mode="exact_ie", target=f)
    with pytest.raises(ValueError):
        find_relevant_variable(_mq(f), stem, frozenset({1}), y, z,
                               ScaleProfile.desk(1), oracle)
    bad_y = Assignment.from_string("011000")  # does not satisfy the stem
    with pytest.raises(ValueError):
        find_relevant_variable(_mq(f), stem, frozenset(), bad_y, z,
                               ScaleProfile.desk(1), oracle)


def test_find_relevant_variable_sampled_agrees_with_exact():
    f, stem, y, z = _relvar_instance()
    prof = ScaleProfile.desk(1)
    t = Teacher(f)
    sampled = NoiseOracle(mode="sampled", samples=4000, seed=9)
    out = find_relevant_variable(t.mq, stem, frozenset(), y, z, prof, sampled)
    assert out.updated and out.index in {2, 3}


# ---------------------------------------------------------------------------
# Claim-level checks


def test_morally_relevant_indices_filters_long_terms():
    prof = ScaleProfile(k=2, tau=2, medium_cutoff=3)
    f = Dnf(8, (Term.of(1, 2), Term.of(3, 4, 5, 6, 7)))
    assert morally_relevant_indices(f, prof) == {1, 2}


def test_check_noise_claims_passes_on_mixed_instance(rng):
    prof = ScaleProfile(k=2, tau=3, medium_cutoff=4)
    # one short term, one long term, spare irrelevant variables
    f = Dnf(12, (Term.of(1, 2),
                 Term(frozenset(Literal(i, True) for i in range(3, 9)))))
    report = check_noise_claims(f, prof, seed=3, max_points=40)
    assert report["ok"], noise_claims_json(report)
    assert set(report["checks"]) == {"short_term_noised_lower",
                                     "long_only_noised_upper",
                                     "irrelevant_flip_upper"}
    for entry in report["checks"].values():
        assert entry["pass"]


def test_check_noise_claims_json_is_stable(rng):
    prof = ScaleProfile.desk(2)
    f = random_dnf(10, 2, rng, lengths=[2, 6])
    a = noise_claims_json(check_noise_claims(f, prof, seed=1))
    b = noise_claims_json(check_noise_claims(f, prof, seed=1))
    assert a == b
