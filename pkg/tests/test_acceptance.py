"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (``pytest tests/test_acceptance.py -v``) or directly as a
script (``python tests/test_acceptance.py``).
"""
import math
import time

import numpy as np
import pytest

from singdmc import bounds as B
from singdmc import channel as C
from singdmc import exactdist as E
from singdmc import measures as M
from singdmc import minimax as MM
from singdmc import verify as V

from helpers import random_channel, random_singular_channel

LN2 = math.log(2)


def _line(num, ok, detail, elapsed, limit):
    status = "PASS" if ok else "FAIL"
    lim = f" (limit {limit:g}s)" if limit else ""
    return f"{status} criterion {num:2d}: {detail} [{elapsed:.2f}s{lim}]"


def _timed(num, limit, fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    if limit is not None and elapsed >= limit:
        ok = False
        detail += f"; runtime {elapsed:.1f}s over budget"
    return ok, _line(num, ok, detail, elapsed, limit)


# -- criteria ---------------------------------------------------------------------------

def criterion_1():
    cases = [(C.bec(d), True, True) for d in (0.1, 0.3, 0.5, 0.9)]
    cases += [(C.bsc(p), True, False) for p in (0.05, 0.11, 0.3, 0.7)]
    cases += [(C.asym_example(), False, True)]
    cases += [(C.identity(k), True, True) for k in (2, 3, 4)]
    bad = [ch.w.tolist() for ch, sym, sing in cases
           if (C.classify(ch).symmetric, C.classify(ch).singular) != (sym, sing)]
    return not bad, f"{len(cases)} channels classified, {len(bad)} wrong verdicts"


def criterion_2():
    rng = np.random.default_rng(2)
    chans = [random_channel(rng) for _ in range(500)]
    chans += [random_singular_channel(rng) for _ in range(500)]
    violations = 0
    for ch in chans:
        p = rng.dirichlet(np.ones(ch.input_size))
        if rng.random() < 0.5:
            p[rng.random(ch.input_size) < 0.3] = 0.0
            if p.sum() == 0:
                p[int(rng.integers(ch.input_size))] = 1.0
            p /= p.sum()
        if (M.reverse_dispersion(ch, p) < 1e-12) != C.is_singular_wrt(ch, p):
            violations += 1
    return violations == 0, f"{len(chans)} channels, {violations} violations"


def criterion_3():
    worst_mgf = worst_mom = 0.0
    for ch in (C.bec(0.3), C.bec(0.5), C.ternary_erasure()):
        u = np.full(ch.input_size, 1 / ch.input_size)
        for lam in (-2, -1, 0.5, 3):
            vals = [M.mgf(ch, u, x, lam) for x in range(ch.input_size)]
            worst_mgf = max(worst_mgf, max(vals) - min(vals))
        law = E.decompose(ch, u, "q")
        cap, _ = M.capacity(ch)
        ref = (cap, M.dispersion(ch, u), M.third_moments(ch, u)[0][0])
        got = (law.mean(), law.var(), law.abs_central_moment(3))
        worst_mom = max(worst_mom, max(abs(a - b) for a, b in zip(got, ref)))
    ok = worst_mgf <= 1e-12 and worst_mom <= 1e-10
    return ok, f"MGF spread {worst_mgf:.2e} (<=1e-12), moment error {worst_mom:.2e} (<=1e-10)"


def criterion_4():
    worst = 0.0
    checks = 0
    for ch in (C.bec(0.5), C.identity(2), C.asym_example()):
        u = np.full(ch.input_size, 1 / ch.input_size)
        top = float(np.max(-np.log(C.alpha_vector(ch, u))))
        for n in range(1, 7):
            word = np.arange(n) % ch.input_size
            measures = ["q"] + list(range(ch.input_size)) + [word]
            atoms = top * np.arange(n + 1)
            ts = np.unique(np.concatenate([np.linspace(0, n * top + 0.5, 9), atoms]))
            for m in measures:
                if isinstance(m, np.ndarray):
                    law = [E.decompose(ch, u, int(x)) for x in m]
                else:
                    law = E.decompose(ch, u, m)
                for t in ts:
                    res = E.tail(law, n, t)
                    cdf, til = E.brute_force_cdf(ch, u, m, n, t)
                    worst = max(worst, abs(res.cdf_at_threshold - cdf), abs(res.tilted_sum - til))
                    checks += 1
    return worst <= 1e-12, f"{checks} comparisons, max deviation {worst:.2e} (<=1e-12)"


def criterion_5():
    bec = C.bec(0.5)
    u = [0.5, 0.5]
    qlaw = E.decompose(bec, u, "q")
    wlaw = E.decompose(bec, u, 0)
    failures = checks = 0
    for n in (10, 50, 100, 200):
        l3 = B.lemma3_bound(qlaw.var(), qlaw.abs_central_moment(3), n)
        for t in np.linspace(0, n * LN2, 101):
            lo, hi = B.berry_esseen(wlaw.mean(), wlaw.var(), wlaw.abs_central_moment(3), n, t)
            cdf = E.exact_cdf(wlaw, n, t)
            failures += (E.tilted_sum(qlaw, n, t) > l3) + (not lo <= cdf <= hi)
            checks += 2
    return failures == 0, f"{checks} inequalities, {failures} violated"


def criterion_6():
    bec = C.bec(0.5)
    c5 = B.prop1_constants(bec, 0.5)
    c1 = B.prop1_constants(bec, 0.1)

    def cond(n):
        return 1 - c5.K / (2 * c5.phi * math.sqrt(n * c5.v)) > 0.5

    ok = (abs(c5.k_ratio - 1) <= 1e-12 and abs(c1.k_ratio - 1) <= 1e-12
          and abs(c5.K - 4.6057) <= 0.001 and abs(c1.K - 10.470) <= 0.002
          and c5.n_o == 1110 and cond(1110) and not cond(1109))
    return ok, (f"k={c5.k_ratio:.15g}, K(0.5)={c5.K:.6f}, K(0.1)={c1.K:.6f}, "
                f"n_o(0.5)={c5.n_o}")


def criterion_7():
    bec = C.bec(0.5)
    margins = []
    for eps in (0.1, 0.5):
        n_o = B.prop1_constants(bec, eps).n_o
        for n in (n_o, 2 * n_o, 4 * n_o):
            rep = MM.np_tau_beta(bec, eps, n)
            margins.append(rep.w_sr - rep.tilted - eps)
    bad = sum(m <= 0 for m in margins)
    return bad == 0, f"6 blocklengths, min(w_sr - tilted - eps) = {min(margins):.4f}, {bad} violations"


def criterion_8():
    bec = C.bec(0.5)
    worst = 0.0
    for eps in (0.1, 0.3):
        for n in (8, 16, 32):
            for rate in (MM.default_rate(bec, eps, n), MM.optimal_rate(bec, eps, n)):
                a = MM.np_tau_beta(bec, eps, n, rate).beta
                b = MM.np_oracle(bec, eps, n, rate)
                worst = max(worst, abs(a - b) / abs(b))
    return worst <= 1e-10, f"12 (n, eps, rate) cases, max relative gap {worst:.2e} (<=1e-10)"


def _slope(ns, gaps):
    return float(np.polyfit(np.log(ns), gaps, 1)[0])


def criterion_9():
    bec = C.bec(0.5)
    eps = 0.1
    c = B.prop1_constants(bec, eps)
    ns = [100, 400, 1600, 6400]

    def gap(rep, n):
        return rep.rate_bound_nats - (n * c.capacity + math.sqrt(n * c.v) * c.quantile)

    gaps = [gap(MM.np_tau_beta(bec, eps, n, MM.optimal_rate(bec, eps, n)), n) for n in ns]
    slope = _slope(ns, gaps)
    proof = [gap(MM.np_tau_beta(bec, eps, n), n) for n in ns]
    ok = all(-5 <= g <= c.K for g in gaps) and slope < 0.1
    return ok, (f"gaps {[round(g, 4) for g in gaps]} in [-5, {c.K:.3f}], slope {slope:.4f} (<0.1); "
                f"diagnostic at the fixed proof rate: gaps {[round(g, 3) for g in proof]}, "
                f"slope {_slope(ns, proof):.4f}")


def criterion_10():
    rng = np.random.default_rng(10)
    violations = rounding = 0
    worst = -math.inf
    for ch in (C.bec(0.5), C.asym_example()):
        for _ in range(100):
            n = int(rng.integers(1, 7))
            counts = rng.multinomial(n, np.full(ch.input_size, 1 / ch.input_size))
            cb = V.random_cc_codebook(rng, counts, int(rng.integers(1, 9)))
            audit = V.audit_lemma2(ch, cb, 0.1)
            worst = max(worst, audit.lower_bound - audit.ml_error)
            violations += not audit.holds
            rounding += audit.holds and audit.lower_bound > audit.ml_error
    return violations == 0, (f"200 codebooks, {violations} violations, max(bound - error) = "
                             f"{worst:.2e} ({rounding} within the {V.AUDIT_SLACK:g} rounding slack)")


def criterion_11():
    ch = C.asym_example()
    problems = []
    drifts = []
    for eps in (0.1, 0.7):
        k = B.prop2_constants(ch, eps)
        for name in ("delta", "nu", "gamma", "v_max", "kappa", "K_s1", "beta1", "beta2", "K_total"):
            val = getattr(k, name)
            if not (math.isfinite(val) and val > 0):
                problems.append(f"{name}({eps})={val}")

        def margin(n, k=k, eps=eps):
            return B.large_distance_margin(n, k.gamma, k.v_eps, k.quantile, k.v_max, eps)

        if not (margin(k.n_o) > 0 and not margin(k.n_o - 1) > 0):
            problems.append(f"n_o({eps})")
        t = 2 * k.K_s1 / (k.phi * math.sqrt(k.nu))
        if not (math.sqrt(k.n_tilde_o) > t and not math.sqrt(k.n_tilde_o - 1) > t):
            problems.append(f"n_tilde_o({eps})")
        fine = B.prop2_constants(ch, eps, net=2 * k.net_per_axis - 1)
        drifts.append(abs(fine.K_total - k.K_total) / k.K_total)
        if drifts[-1] >= 0.05:
            problems.append(f"drift({eps})")
    return not problems, (f"constants positive/finite, thresholds tight, K_total drift "
                          f"{max(drifts):.1e} (<5%)" if not problems else f"failed: {problems}")


CRITERIA = [
    (1, 1.0, criterion_1), (2, 10.0, criterion_2), (3, 1.0, criterion_3),
    (4, 30.0, criterion_4), (5, 30.0, criterion_5), (6, None, criterion_6),
    (7, 120.0, criterion_7), (8, 60.0, criterion_8), (9, 300.0, criterion_9),
    (10, 120.0, criterion_10), (11, 300.0, criterion_11),
]


@pytest.mark.parametrize("num,limit,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, limit, fn, capsys):
    ok, line = _timed(num, limit, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [_timed(num, limit, fn) for num, limit, fn in CRITERIA]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(ok for ok, _ in results) else 1)
