# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; bit-identical to fairnoise._pykern.

Running sums accumulate left to right and every per-candidate expression
mirrors the numpy fallback term by term, so results match exactly.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def best_split(const double[::1] values, const double[::1] pos_weight, const double[::1] weight):
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i, best_i = -1
    cdef double total_w = 0.0, total_p = 0.0
    cdef double wl = 0.0, pl = 0.0, wr, pr
    cdef double r1l, r0l, r1r, r0r, score
    cdef double best = np.inf

    if n < 2:
        return -1, np.inf
    for i in range(n):
        total_w += weight[i]
        total_p += pos_weight[i]
    for i in range(n - 1):
        wl += weight[i]
        pl += pos_weight[i]
        if values[i] == values[i + 1] or wl <= 0.0:
            continue
        wr = total_w - wl
        if wr <= 0.0:
            continue
        pr = total_p - pl
        r1l = pl / wl
        r0l = (wl - pl) / wl
        r1r = pr / wr
        r0r = (wr - pr) / wr
        score = wl * (1.0 - r1l * r1l - r0l * r0l) + wr * (1.0 - r1r * r1r - r0r * r0r)
        if score < best:
            best = score
            best_i = i
    if best_i < 0:
        return -1, np.inf
    return best_i, best


def cell_sums(const cnp.int64_t[::1] labels, const cnp.int64_t[::1] protected, const double[::1] probs):
    cdef Py_ssize_t n = labels.shape[0]
    cdef Py_ssize_t i, c
    counts_arr = np.zeros(4, dtype=np.int64)
    sums_arr = np.zeros(4, dtype=np.float64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef double[::1] sums = sums_arr
    for i in range(n):
        c = 2 * labels[i] + protected[i]
        counts[c] += 1
        sums[c] += probs[i]
    return counts_arr, sums_arr


def discrete_replace(const cnp.int64_t[::1] codes, const double[::1] cdf,
                     const double[::1] u_replace, const double[::1] u_category,
                     double p_replace):
    cdef Py_ssize_t n = codes.shape[0]
    cdef Py_ssize_t m = cdf.shape[0]
    cdef Py_ssize_t i, j
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    for i in range(n):
        if u_replace[i] < p_replace:
            j = 0
            while j < m - 1 and cdf[j] <= u_category[i]:
                j += 1
            out[i] = j
        else:
            out[i] = codes[i]
    return out_arr
