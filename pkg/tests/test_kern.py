"""Compiled kernel vs pure-Python fallback: identical outputs on shared inputs."""

import numpy as np
import pytest

from dnflearn import kern
from dnflearn.booleans import Assignment, Dnf, eval_dnf, eval_term
from dnflearn.tables import conj_table, dnf_truth_table, term_from_mask_val, term_mask_val_arrays

from conftest import random_dnf


def test_both_backends_are_available():
    backends = kern.available_backends()
    assert set(backends) == {"python", "compiled"}
    assert kern.BACKEND in backends


def test_dnf_table_matches_pointwise_eval(rng):
    for _ in range(10):
        f = random_dnf(8, 3, rng)
        table = dnf_truth_table(f)
        assert table.dtype == np.uint8 and table.shape == (256,)
        for bits in range(256):
            assert table[bits] == eval_dnf(f, Assignment(8, bits))


def test_dnf_table_constant_false():
    assert not dnf_truth_table(Dnf(5)).any()


def test_backends_agree_on_dnf_table(rng):
    backends = kern.available_backends()
    for _ in range(10):
        f = random_dnf(10, 4, rng)
        masks, vals = term_mask_val_arrays(f)
        tables = {name: mod.dnf_table(10, masks, vals) for name, mod in backends.items()}
        assert np.array_equal(tables["python"], tables["compiled"])


def test_backends_agree_on_stem_walks(rng):
    backends = kern.available_backends()
    n = 10
    for _ in range(10):
        f = random_dnf(n, 3, rng)
        table = dnf_truth_table(f)
        pos = np.flatnonzero(table)
        if pos.size == 0:
            continue
        y = Assignment(n, int(pos[0]))
        perms = np.stack([rng.permutation(n) + 1 for _ in range(16)]).astype(np.uint64)
        flipbits = np.uint64(1) << (np.uint64(n) - perms)
        results = {}
        for name, mod in backends.items():
            masks, vals = mod.stem_walks(table, n, y.bits, flipbits)
            results[name] = (masks.tolist(), vals.tolist())
        assert results["python"] == results["compiled"]


def test_stem_walks_outputs_are_satisfied_by_y(rng):
    n = 9
    f = random_dnf(n, 3, rng)
    table = dnf_truth_table(f)
    pos = np.flatnonzero(table)
    if pos.size == 0:
        pytest.skip("unsatisfiable sample")
    y = Assignment(n, int(pos[-1]))
    perms = np.stack([rng.permutation(n) + 1 for _ in range(32)]).astype(np.uint64)
    flipbits = np.uint64(1) << (np.uint64(n) - perms)
    masks, vals = kern.stem_walks(table, n, y.bits, flipbits)
    for m, v in zip(masks.tolist(), vals.tolist()):
        t = term_from_mask_val(n, m, v)
        assert eval_term(t, y) == 1


def test_conj_table_matches_mask_val():
    from dnflearn.booleans import Term

    n = 6
    t = Term.of(1, -3, 6)
    mask, val = t.mask_val(n)
    table = conj_table(n, mask, val)
    for bits in range(1 << n):
        assert bool(table[bits]) == bool(eval_term(t, Assignment(n, bits)))


def test_term_from_mask_val_roundtrip():
    from dnflearn.booleans import Term

    n = 8
    for t in (Term.of(2, -5, 8), Term(frozenset()), Term.of(-1)):
        assert term_from_mask_val(n, *t.mask_val(n)) == t
