# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: composition enumeration, grouped tails, exhaustive ML decoding."""
import math

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, lgamma, isinf, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double TIE_RTOL = 1e-12


cdef inline void _neumaier(double *acc, double *comp, double x) noexcept nogil:
    cdef double t = acc[0] + x
    if fabs(acc[0]) >= fabs(x):
        comp[0] += (acc[0] - t) + x
    else:
        comp[0] += (x - t) + acc[0]
    acc[0] = t


cdef inline bint _next_composition(long *k, int parts, long n) noexcept nogil:
    # colex successor; returns False after the last composition (0, .., 0, n)
    cdef int j
    if parts == 1 or k[parts - 1] == n:
        return False
    j = parts - 2
    while k[j] == 0:
        j -= 1
    k[j] -= 1
    if j + 1 == parts - 1:
        k[parts - 1] += 1
    else:
        k[j + 1] = k[parts - 1] + 1
        k[parts - 1] = 0
    return True


def compositions(long n, int parts):
    cdef long count = math.comb(n + parts - 1, parts - 1)
    out = np.zeros((count, parts), dtype=np.int64)
    cdef long[:, ::1] view = out
    cdef long *k = <long *> malloc(parts * sizeof(long))
    cdef long row = 0
    cdef int j
    for j in range(parts):
        k[j] = 0
    k[0] = n
    try:
        while True:
            for j in range(parts):
                view[row, j] = k[j]
            row += 1
            if not _next_composition(k, parts, n):
                break
    finally:
        free(k)
    return out


cdef double[::1] _lfact(long n):
    out = np.empty(n + 1)
    cdef double[::1] v = out
    cdef long i
    for i in range(n + 1):
        v[i] = lgamma(i + 1.0)
    return v


def composition_terms(const double[::1] values, const double[::1] logp, long n):
    cdef int parts = values.shape[0]
    cdef long count = math.comb(n + parts - 1, parts - 1)
    lp_out = np.empty(count)
    s_out = np.empty(count)
    cdef double[::1] lpv = lp_out
    cdef double[::1] sv = s_out
    cdef double[::1] lf = _lfact(n)
    cdef long *k = <long *> malloc(parts * sizeof(long))
    cdef long row = 0
    cdef int j
    cdef double lp, s
    cdef bint dead
    for j in range(parts):
        k[j] = 0
    k[0] = n
    try:
        while True:
            lp = lf[n]
            s = 0.0
            dead = False
            for j in range(parts):
                if k[j] > 0:
                    if isinf(logp[j]):
                        dead = True
                        break
                    lp += k[j] * logp[j] - lf[k[j]]
                    s += k[j] * values[j]
            if not dead:
                lpv[row] = lp
                sv[row] = s
                row += 1
            if not _next_composition(k, parts, n):
                break
    finally:
        free(k)
    return lp_out[:row], s_out[:row]


def iid_tail(const double[::1] values, const double[::1] logp, long n, double threshold, double slack):
    """Exact ``P(S_n <= t)`` and ``E[1{S_n <= t} exp(-(t - S_n))]`` by composition enumeration."""
    cdef int parts = values.shape[0]
    cdef double[::1] lf = _lfact(n)
    cdef long *k = <long *> malloc(parts * sizeof(long))
    cdef double cdf = 0.0, cdf_c = 0.0, til = 0.0, til_c = 0.0
    cdef double lp, s, limit = threshold + slack
    cdef long visited = 0
    cdef int j
    cdef bint dead
    for j in range(parts):
        k[j] = 0
    k[0] = n
    try:
        with nogil:
            while True:
                visited += 1
                s = 0.0
                for j in range(parts):
                    s += k[j] * values[j]
                if s <= limit:
                    lp = lf[n]
                    dead = False
                    for j in range(parts):
                        if k[j] > 0:
                            if isinf(logp[j]):
                                dead = True
                                break
                            lp += k[j] * logp[j] - lf[k[j]]
                    if not dead:
                        _neumaier(&cdf, &cdf_c, exp(lp))
                        _neumaier(&til, &til_c, exp(lp - (threshold - s)))
                if not _next_composition(k, parts, n):
                    break
    finally:
        free(k)
    return cdf + cdf_c, til + til_c, visited


def product_tail(lps, ss, double threshold, double slack):
    """Odometer over the cartesian product of per-group (log-prob, statistic) tables."""
    cdef int g = len(lps)
    cdef int i
    if g == 0:
        return (1.0, exp(-threshold), 1) if 0.0 <= threshold + slack else (0.0, 0.0, 1)
    flat_lp = np.ascontiguousarray(np.concatenate(lps), dtype=np.float64)
    flat_s = np.ascontiguousarray(np.concatenate(ss), dtype=np.float64)
    sizes_arr = np.array([len(a) for a in lps], dtype=np.int64)
    if np.any(sizes_arr == 0):
        return 0.0, 0.0, 0
    offs_arr = np.concatenate([[0], np.cumsum(sizes_arr)[:-1]]).astype(np.int64)
    cdef double[::1] alp = flat_lp
    cdef double[::1] asv = flat_s
    cdef long[::1] sizes = sizes_arr
    cdef long[::1] offs = offs_arr
    idx_arr = np.zeros(g, dtype=np.int64)
    plp_arr = np.zeros(g + 1)
    ps_arr = np.zeros(g + 1)
    cdef long[::1] idx = idx_arr
    cdef double[::1] plp = plp_arr
    cdef double[::1] ps = ps_arr
    cdef double cdf = 0.0, cdf_c = 0.0, til = 0.0, til_c = 0.0
    cdef double limit = threshold + slack
    cdef long visited = 0
    cdef int level = 0
    with nogil:
        for i in range(g):
            plp[i + 1] = plp[i] + alp[offs[i]]
            ps[i + 1] = ps[i] + asv[offs[i]]
        while True:
            visited += 1
            if ps[g] <= limit:
                _neumaier(&cdf, &cdf_c, exp(plp[g]))
                _neumaier(&til, &til_c, exp(plp[g] - (threshold - ps[g])))
            level = g - 1
            while level >= 0:
                idx[level] += 1
                if idx[level] < sizes[level]:
                    break
                idx[level] = 0
                level -= 1
            if level < 0:
                break
            for i in range(level, g):
                plp[i + 1] = plp[i] + alp[offs[i] + idx[i]]
                ps[i + 1] = ps[i] + asv[offs[i] + idx[i]]
    return cdf + cdf_c, til + til_c, visited


def ml_error(w, codebook):
    """Exact average ML error over all output words; ties go to the lowest message index."""
    cdef const double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const long[:, ::1] cb = np.ascontiguousarray(codebook, dtype=np.int64)
    cdef int m = cb.shape[0]
    cdef int n = cb.shape[1]
    cdef int ny = wv.shape[1]
    prefix_arr = np.ones((n + 1, m))
    y_arr = np.zeros(n, dtype=np.int64)
    cdef double[:, ::1] prefix = prefix_arr
    cdef long[::1] y = y_arr
    cdef int start = 0, i, j, pos, best
    cdef double top, tot, acc = 0.0, acc_c = 0.0, lik
    with nogil:
        while True:
            for i in range(start, n):
                for j in range(m):
                    prefix[i + 1, j] = prefix[i, j] * wv[cb[j, i], y[i]]
            top = 0.0
            tot = 0.0
            for j in range(m):
                lik = prefix[n, j]
                tot += lik
                if lik > top:
                    top = lik
            if top > 0.0:
                best = 0
                for j in range(m):
                    if prefix[n, j] >= top * (1.0 - TIE_RTOL):
                        best = j
                        break
                _neumaier(&acc, &acc_c, tot - prefix[n, best])
            pos = n - 1
            while pos >= 0:
                y[pos] += 1
                if y[pos] < ny:
                    break
                y[pos] = 0
                pos -= 1
            if pos < 0:
                break
            start = pos
    return (acc + acc_c) / m
