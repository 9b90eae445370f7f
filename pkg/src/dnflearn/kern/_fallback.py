"""Pure-numpy implementations of the hot kernels.

Must stay bit-for-bit equivalent to the compiled versions in _corekern.pyx;
tests/test_kern.py enforces this when the extension is available.
"""

import numpy as np


def dnf_table(n, masks, vals):
    """Truth table of a DNF given per-term packed (mask, value) pairs.

    Index p holds f at the assignment whose bit string is the n-digit
    binary expansion of p.
    """
    idx = np.arange(1 << n, dtype=np.uint64)
    out = np.zeros(1 << n, dtype=np.uint8)
    for m, v in zip(masks, vals):
        out |= (idx & m) == v
    return out


def stem_walks(table, n, ybits, flipbits):
    """Run randomized flipping walks from y and collect candidate stems.

    ``flipbits[r, s]`` is the single-bit mask of the coordinate considered at
    step s of repetition r.  Each repetition emits a candidate before every
    flip test and once at the end; a candidate is kept only if the induced
    term is satisfied by y.  Returns parallel (masks, values) arrays of the
    kept candidates, duplicates included.
    """
    ybits = int(ybits)
    allbits = (np.uint64(1) << np.arange(n - 1, -1, -1, dtype=np.uint64))
    masks_out = []
    vals_out = []
    reps = flipbits.shape[0]
    for r in range(reps):
        z = ybits
        for step in range(n + 1):
            dead = table[np.uint64(z) ^ allbits] == 0
            mask = int(np.bitwise_or.reduce(allbits[dead], initial=np.uint64(0)))
            val = z & mask
            if (ybits & mask) == val:
                masks_out.append(mask)
                vals_out.append(val)
            if step < n:
                fb = int(flipbits[r, step])
                if table[z ^ fb]:
                    z ^= fb
    return (np.array(masks_out, dtype=np.uint64),
            np.array(vals_out, dtype=np.uint64))
