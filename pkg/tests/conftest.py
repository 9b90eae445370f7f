"""Shared helpers for the test suite."""

import numpy as np
import pytest

from dnflearn.booleans import Dnf, gen_random_dnf


def random_dnf(n: int, k: int, rng: np.random.Generator, lengths=None) -> Dnf:
    """Random k-term DNF over n variables; random term lengths if not given."""
    if lengths is None:
        lengths = [int(rng.integers(1, n + 1)) for _ in range(k)]
    return gen_random_dnf(n, k, lengths, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(0xD1CE)
