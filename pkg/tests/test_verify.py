import math

import numpy as np
import pytest

from singdmc import channel as C
from singdmc import exactdist as E
from singdmc import verify as V
from singdmc.errors import HypothesisFailure, TooLarge

BEC = C.bec(0.5)
LN2 = math.log(2)


def test_ml_error_trivial_cases():
    assert V.ml_error_exact(BEC, V.Codebook.from_words([[0, 1, 1]])) == 0.0
    assert V.ml_error_exact(BEC, V.Codebook.from_words([[0, 1], [0, 1]])) == pytest.approx(0.5)


def test_repetition_code_regression():
    # frozen from this module's exhaustive oracle: error only on the all-erased output
    cb = V.Codebook.from_words([[0, 0, 0], [1, 1, 1]])
    assert V.ml_error_exact(BEC, cb) == pytest.approx(0.0625, abs=1e-15)


def test_ml_error_too_large():
    with pytest.raises(TooLarge):
        V.ml_error_exact(BEC, V.Codebook.from_words([[0] * 20]))


def test_ml_error_output_relabel_invariant(rng):
    for _ in range(20):
        nx, ny = 3, 4
        w = rng.dirichlet(np.ones(ny), size=nx)
        ch = C.validate(w)
        perm = rng.permutation(ny)
        other = C.validate(w[:, perm])
        cb = V.Codebook.from_words(rng.integers(nx, size=(4, 4)), input_size=nx)
        assert V.ml_error_exact(ch, cb) == pytest.approx(V.ml_error_exact(other, cb), abs=1e-14)


def test_ml_error_order_invariant_without_ties(rng):
    # distinct compositions on generic rows: likelihoods never tie
    words = np.array([[0, 0, 0], [0, 1, 1], [1, 1, 1]])
    for _ in range(10):
        ch = C.validate(rng.dirichlet(np.ones(3), size=2))
        a = V.ml_error_exact(ch, V.Codebook.from_words(words))
        b = V.ml_error_exact(ch, V.Codebook.from_words(words[::-1]))
        assert a == pytest.approx(b, abs=1e-14)


def test_ml_error_order_invariant_with_ties(rng):
    # the average error is 1 - (1/M) sum_y max_j W(y|x_j), whatever the tie-break
    words = rng.integers(2, size=(5, 4))
    a = V.ml_error_exact(BEC, V.Codebook.from_words(words, input_size=2))
    for _ in range(5):
        b = V.ml_error_exact(BEC, V.Codebook.from_words(words[rng.permutation(5)], input_size=2))
        assert a == pytest.approx(b, abs=1e-14)


def test_codebook_composition():
    cc = V.Codebook.from_words([[0, 1, 1], [1, 0, 1]], input_size=2)
    np.testing.assert_array_equal(cc.composition, [1, 2])
    assert V.Codebook.from_words([[0, 1], [1, 1]]).composition is None
    with pytest.raises(ValueError):
        V.Codebook.from_words([[0, 3]], input_size=2)


def test_audit_size_one():
    cb = V.Codebook.from_words([[0, 1, 0, 1]], input_size=2)
    audit = V.audit_lemma2(BEC, cb, 0.1)
    assert audit.rate == 0.0
    assert audit.lower_bound <= 0.0 <= audit.ml_error and audit.holds


def test_audit_rejects_non_cc():
    with pytest.raises(HypothesisFailure):
        V.audit_lemma2(BEC, V.Codebook.from_words([[0, 0], [0, 1]], input_size=2), 0.1)
    with pytest.raises(HypothesisFailure):
        V.audit_lemma2(C.bsc(0.1), V.Codebook.from_words([[0, 1], [1, 0]], input_size=2), 0.1)


@pytest.mark.parametrize("ch", [C.bec(0.5), C.asym_example(), C.bec(0.2)])
def test_random_audits(ch, rng):
    for _ in range(60):
        n = int(rng.integers(1, 6))
        counts = rng.multinomial(n, np.full(ch.input_size, 1 / ch.input_size))
        cb = V.random_cc_codebook(rng, counts, int(rng.integers(1, 9)))
        audit = V.audit_lemma2(ch, cb, 0.1)
        assert audit.holds, audit


def test_mc_inf_threshold_and_determinism():
    x = [0, 1] * 10
    assert V.mc_estimate(BEC, x, math.inf, 2000, seed=1) == (1.0, 0.0)
    a = V.mc_estimate(BEC, x, 6.0, 5000, seed=42)
    b = V.mc_estimate(BEC, x, 6.0, 5000, seed=42)
    assert a == b
    with pytest.raises(ValueError):
        V.mc_estimate(BEC, x, 6.0, 10, seed=0)


def test_mc_agrees_with_exact():
    n = 200
    t = n * 0.5 * LN2
    est, hw = V.mc_estimate(BEC, [0, 1] * (n // 2), t, 10**5, seed=2024)
    exact = E.exact_cdf(E.decompose(BEC, [0.5, 0.5], 0), n, t)
    assert abs(est - exact) <= 3 * hw
