"""Truth-table helpers over the packed assignment encoding."""

from __future__ import annotations

import numpy as np

from . import kern
from .booleans import Dnf, Term


def term_mask_val_arrays(f: Dnf):
    masks = np.array([t.mask_val(f.n)[0] for t in f.terms], dtype=np.uint64)
    vals = np.array([t.mask_val(f.n)[1] for t in f.terms], dtype=np.uint64)
    return masks, vals


def dnf_truth_table(f: Dnf) -> np.ndarray:
    """uint8 table of length 2^n; index p = packed assignment bits."""
    if f.k == 0:
        return np.zeros(1 << f.n, dtype=np.uint8)
    masks, vals = term_mask_val_arrays(f)
    return kern.dnf_table(f.n, masks, vals)


def conj_table(n: int, mask: int, val: int) -> np.ndarray:
    """Boolean table of the conjunction with packed (mask, value)."""
    idx = np.arange(1 << n, dtype=np.uint64)
    return (idx & np.uint64(mask)) == np.uint64(val)


def term_from_mask_val(n: int, mask: int, val: int) -> Term:
    signed = []
    for i in range(1, n + 1):
        b = 1 << (n - i)
        if mask & b:
            signed.append(i if val & b else -i)
    return Term.of(*signed)
