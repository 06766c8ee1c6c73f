"""Pure-Python/numpy implementations of the hot loops.

Signatures mirror ``_ckernels``; this module is used when the compiled
extension is unavailable or ``SINGDMC_PURE_PYTHON`` is set.
"""
import math

import numpy as np
from scipy.special import gammaln

CHUNK = 1 << 18
TIE_RTOL = 1e-12


def compositions(n, parts):
    """Array of shape (C(n+parts-1, parts-1), parts) listing every composition.

    Rows are in descending lexicographic order, matching the compiled kernel.
    """
    rows = np.zeros((1, 0), dtype=np.int64)
    sums = np.zeros(1, dtype=np.int64)
    for _ in range(parts - 1):
        counts = n - sums + 1
        rep = np.repeat(np.arange(rows.shape[0]), counts)
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        vals = np.arange(rep.size) - starts
        rows = np.hstack([rows[rep], vals[:, None]])
        sums = sums[rep] + vals
    return np.ascontiguousarray(np.hstack([rows, (n - sums)[:, None]])[::-1])


def _log_factorials(n):
    # lgamma per entry; a running sum of logs drifts at large n
    return gammaln(np.arange(n + 1, dtype=np.float64) + 1.0)


def composition_terms(values, logp, n):
    """Log-probability and statistic of every class-count vector of ``n`` i.i.d. draws."""
    values = np.asarray(values, dtype=np.float64)
    logp = np.asarray(logp, dtype=np.float64)
    k = compositions(n, values.size)
    lf = _log_factorials(n)
    with np.errstate(invalid="ignore"):
        weighted = np.where(k > 0, k * logp[None, :], 0.0)
    lp = lf[n] - lf[k].sum(axis=1) + weighted.sum(axis=1)
    s = k @ values
    keep = np.isfinite(lp)
    return lp[keep], s[keep]


def _tail_from_terms(lp, s, threshold, slack):
    inside = s <= threshold + slack
    cdf = math.fsum(np.exp(lp[inside]).tolist())
    tilted = math.fsum(np.exp(lp[inside] - (threshold - s[inside])).tolist())
    return cdf, tilted


def iid_tail(values, logp, n, threshold, slack):
    lp, s = composition_terms(values, logp, n)
    cdf, tilted = _tail_from_terms(lp, s, threshold, slack)
    return cdf, tilted, math.comb(n + len(values) - 1, len(values) - 1)


def product_tail(lps, ss, threshold, slack):
    """Tail of the sum of independent groups given per-group (log-prob, statistic) tables."""
    lp = np.zeros(1)
    s = np.zeros(1)
    count = 1
    for glp, gs in zip(lps, ss):
        glp = np.asarray(glp, dtype=np.float64)
        gs = np.asarray(gs, dtype=np.float64)
        lp = (lp[:, None] + glp[None, :]).ravel()
        s = (s[:, None] + gs[None, :]).ravel()
        count *= glp.size
    cdf, tilted = _tail_from_terms(lp, s, threshold, slack)
    return cdf, tilted, count


def ml_error(w, codebook):
    """Exact average ML error; ties go to the lowest message index."""
    w = np.asarray(w, dtype=np.float64)
    cb = np.asarray(codebook, dtype=np.int64)
    m, n = cb.shape
    ny = w.shape[1]
    total = ny**n
    powers = ny ** np.arange(n - 1, -1, -1, dtype=np.int64)
    parts = []
    for lo in range(0, total, CHUNK):
        idx = np.arange(lo, min(total, lo + CHUNK), dtype=np.int64)
        ys = (idx[:, None] // powers[None, :]) % ny
        lik = np.ones((idx.size, m))
        for i in range(n):
            lik *= w[cb[None, :, i], ys[:, i, None]]
        top = lik.max(axis=1)
        tied = lik >= top[:, None] * (1 - TIE_RTOL)
        decoded = np.argmax(tied, axis=1)
        err = lik.sum(axis=1) - lik[np.arange(idx.size), decoded]
        parts.extend(err.tolist())
    return math.fsum(parts) / m
