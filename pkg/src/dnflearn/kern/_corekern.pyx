# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: DNF truth tables and stem-finding walks.

Semantics must match kern/_fallback.py exactly.
"""

import numpy as np

cimport numpy as cnp


def dnf_table(int n, cnp.uint64_t[::1] masks, cnp.uint64_t[::1] vals):
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n
    out = np.zeros(size, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    cdef Py_ssize_t p, t
    cdef Py_ssize_t nt = masks.shape[0]
    cdef unsigned long long up
    for p in range(size):
        up = <unsigned long long>p
        for t in range(nt):
            if (up & masks[t]) == vals[t]:
                o[p] = 1
                break
    return out


def stem_walks(cnp.uint8_t[::1] table, int n, unsigned long long ybits,
               cnp.uint64_t[:, ::1] flipbits):
    cdef Py_ssize_t reps = flipbits.shape[0]
    cdef Py_ssize_t cap = reps * (n + 1)
    masks_out = np.empty(cap, dtype=np.uint64)
    vals_out = np.empty(cap, dtype=np.uint64)
    cdef cnp.uint64_t[::1] mo = masks_out
    cdef cnp.uint64_t[::1] vo = vals_out
    cdef Py_ssize_t cnt = 0
    cdef unsigned long long z, mask, val, b, fb
    cdef Py_ssize_t r, step, i
    cdef unsigned long long topbit = (<unsigned long long>1) << (n - 1)
    for r in range(reps):
        z = ybits
        for step in range(n + 1):
            mask = 0
            b = topbit
            for i in range(n):
                if table[z ^ b] == 0:
                    mask |= b
                b >>= 1
            val = z & mask
            if (ybits & mask) == val:
                mo[cnt] = mask
                vo[cnt] = val
                cnt += 1
            if step < n:
                fb = flipbits[r, step]
                if table[z ^ fb]:
                    z = z ^ fb
    return masks_out[:cnt].copy(), vals_out[:cnt].copy()
