# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled split scan for tree building; hot inner loop of gbdt training.

Must stay bit-identical to _split_np.best_split: sequential prefix sums,
same gain association order, strict > comparisons scanning features in
ascending order then rows in ascending order. Compiled with
-ffp-contract=off so no FMA contraction changes results.
"""

import numpy as np

NO_SPLIT = (-1, 0, 0.0, 0.0)


def best_split(
    double[:, ::1] x_sorted,
    double[:, ::1] g_sorted,
    double[:, ::1] h_sorted,
    double lam,
    int min_leaf,
):
    """See _split_np.best_split; identical contract and identical results."""
    cdef Py_ssize_t n = x_sorted.shape[0]
    cdef Py_ssize_t d = x_sorted.shape[1]
    if n < 2 * min_leaf or n < 2:
        return NO_SPLIT

    cdef double best_gain = 0.0
    cdef Py_ssize_t best_feat = -1
    cdef Py_ssize_t best_row = -1
    cdef double best_thr = 0.0

    cdef Py_ssize_t i, j, n_left
    cdef double g_total, h_total, gl, hl, gr, hr, gain, parent

    for j in range(d):
        g_total = 0.0
        h_total = 0.0
        for i in range(n):
            g_total = g_total + g_sorted[i, j]
            h_total = h_total + h_sorted[i, j]
        parent = g_total * g_total / (h_total + lam)
        gl = 0.0
        hl = 0.0
        for i in range(n - 1):
            gl = gl + g_sorted[i, j]
            hl = hl + h_sorted[i, j]
            if x_sorted[i, j] == x_sorted[i + 1, j]:
                continue
            n_left = i + 1
            if n_left < min_leaf or n - n_left < min_leaf:
                continue
            gr = g_total - gl
            hr = h_total - hl
            gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent
            if gain > best_gain:
                best_gain = gain
                best_feat = j
                best_row = i
                best_thr = x_sorted[i, j]

    if best_feat < 0:
        return NO_SPLIT
    return int(best_feat), int(best_row + 1), float(best_thr), float(best_gain)
