import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singdmc import channel as C
from singdmc.errors import (BadParameter, EmptyAlphabet, NegativeEntry, NonStochastic,
                            SearchBudgetExceeded, ValidationError)

from helpers import perturb_one, random_channel, random_singular_channel


# -- validation ------------------------------------------------------------------

def test_validate_trivial():
    ch = C.validate([[1]])
    assert (ch.input_size, ch.output_size) == (1, 1)


def test_validate_rejects_bad_row_sum():
    with pytest.raises(NonStochastic):
        C.validate([[0.5, 0.5], [0.5, 0.6]])


def test_validate_rejects_negative_and_empty():
    with pytest.raises(NegativeEntry):
        C.validate([[1.2, -0.2]])
    with pytest.raises(EmptyAlphabet):
        C.validate(np.zeros((0, 2)))


def test_validate_row_sum_tolerance():
    C.validate([[0.5, 0.5 + 5e-10]])
    with pytest.raises(NonStochastic):
        C.validate([[0.5, 0.5 + 5e-9]])


def test_zero_columns_stripped_with_map():
    ch = C.validate([[0.5, 0.0, 0.5], [0.25, 0.0, 0.75]])
    assert ch.output_size == 2
    assert ch.column_map == (0, 2)


def test_asym_example_entries():
    ch = C.asym_example()
    assert ch.w.shape == (3, 4)
    assert ch.w[0, 0] == pytest.approx(2 / 3, abs=0)
    assert ch.w[1, 2] == pytest.approx(5 / 6, abs=0)
    assert set(np.unique(ch.w)) <= {0.0, 1 / 6, 2 / 3, 5 / 6}


def test_bec_zero_strips_erasure():
    ch = C.bec(0.0)
    np.testing.assert_array_equal(ch.w, np.eye(2))


def test_builtin_bad_parameter():
    with pytest.raises(BadParameter):
        C.bsc(1.5)
    with pytest.raises(BadParameter):
        C.parse_builtin("nosuch:1")
    with pytest.raises(BadParameter):
        C.parse_builtin("bec:abc")


def test_parse_builtin_round_trip():
    assert C.parse_builtin("bec:0.5") == C.bec(0.5)
    assert C.parse_builtin("identity:3") == C.identity(3)
    assert C.parse_builtin("asym_example") == C.asym_example()


def test_load_channel(tmp_path):
    path = tmp_path / "ch.json"
    path.write_text(json.dumps({"W": [[0.9, 0.1], [0.1, 0.9]], "labels_y": ["a", "b"]}))
    ch = C.load_channel(path)
    assert ch == C.bsc(0.1)
    assert ch.labels_y == ("a", "b")
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        C.load_channel(path)


def test_channel_is_immutable():
    ch = C.bec(0.5)
    with pytest.raises(ValueError):
        ch.w[0, 0] = 1.0


# -- singularity -----------------------------------------------------------------

@pytest.mark.parametrize("ch,expected", [
    (C.bec(0.5), True), (C.bsc(0.1), False), (C.asym_example(), True),
    (C.identity(3), True), (C.ternary_erasure(), True),
])
def test_is_singular(ch, expected):
    assert C.is_singular(ch) is expected


def test_is_singular_wrt():
    assert C.is_singular_wrt(C.bsc(0.1), [1.0, 0.0])
    assert C.is_singular_wrt(C.bec(0.5), [0.5, 0.5])
    assert not C.is_singular_wrt(C.bsc(0.1), [0.5, 0.5])


def test_relative_tolerance_does_not_flap():
    # entries equal up to last-bit noise stay singular
    a = 0.1 + 1e-17
    ch = C.validate([[a, 1 - a, 0.0], [0.1, 0.0, 0.9]])
    assert C.is_singular(ch)


def test_full_support_agreement(rng):
    for _ in range(50):
        ch = random_channel(rng)
        p = rng.dirichlet(np.ones(ch.input_size))
        assert C.is_singular(ch) == C.is_singular_wrt(ch, p)


def test_constructed_singular_and_perturbation(rng):
    flipped = 0
    for _ in range(200):
        ch = random_singular_channel(rng)
        assert C.is_singular(ch)
        bumped = perturb_one(ch, rng)
        if bumped is not None:
            assert not C.is_singular(bumped)
            flipped += 1
    assert flipped > 20


def test_output_identity_for_singular(rng):
    for _ in range(50):
        ch = random_singular_channel(rng)
        q_in = rng.dirichlet(np.ones(ch.input_size))
        deltas = C.column_constants(ch)
        q = C.output_dist(ch, q_in)
        a = C.alpha_vector(ch, q_in)
        for y in range(ch.output_size):
            assert q[y] == pytest.approx(deltas[y] * a[y], abs=1e-12)


# -- alpha, output ------------------------------------------------------------------

def test_alpha_values():
    bec = C.bec(0.5)
    assert C.alpha(bec, [0.5, 0.5], 2) == 1.0
    assert C.alpha(bec, [0.5, 0.5], 0) == 0.5
    assert C.alpha(C.identity(2), [1.0, 0.0], 0) == 1.0


def test_output_dist():
    np.testing.assert_allclose(C.output_dist(C.identity(3), np.full(3, 1 / 3)), np.full(3, 1 / 3))
    np.testing.assert_allclose(C.output_dist(C.bec(0.5), [0.5, 0.5]), [0.25, 0.25, 0.5])
    q = C.output_dist(C.asym_example(), np.full(3, 1 / 3))
    assert q[2] == pytest.approx(5 / 9, abs=1e-15)


# -- symmetry ------------------------------------------------------------------------

def test_symmetry_verdicts():
    ok, part = C.detect_symmetry(C.identity(4))
    assert ok and sorted(map(sorted, part)) == [[0, 1, 2, 3]]
    ok, part = C.detect_symmetry(C.bec(0.5))
    assert ok and sorted(map(sorted, part)) == [[0, 1], [2]]
    assert C.detect_symmetry(C.asym_example())[0] is False
    assert C.detect_symmetry(C.bsc(0.2))[0] is True


def _is_witness(ch, part):
    cover = sorted(y for block in part for y in block)
    if cover != list(range(ch.output_size)):
        return False
    for block in part:
        sub = ch.w[:, block]
        rows = {tuple(sorted(r)) for r in sub}
        cols = {tuple(sorted(c)) for c in sub.T}
        if len(rows) != 1 or len(cols) != 1:
            return False
    return True


def test_partition_is_witness():
    for ch in (C.bec(0.3), C.ternary_erasure(), C.identity(3), C.bsc(0.3)):
        ok, part = C.detect_symmetry(ch)
        assert ok and _is_witness(ch, part)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_symmetry_invariant_under_permutations(seed):
    rng = np.random.default_rng(seed)
    base = [C.bec(0.3), C.ternary_erasure(), C.asym_example(), C.bsc(0.2)][seed % 4]
    w = base.w[rng.permutation(base.input_size)][:, rng.permutation(base.output_size)]
    assert C.detect_symmetry(C.validate(w))[0] == C.detect_symmetry(base)[0]


def test_search_budget():
    with pytest.raises(SearchBudgetExceeded):
        C.detect_symmetry(C.ternary_erasure(), budget=1)


def test_classification_contents():
    cls = C.classify(C.bec(0.5))
    assert cls.symmetric and cls.singular
    assert cls.column_constants == {0: 0.5, 1: 0.5, 2: 0.5}
    # one positive entry per row in each block
    assert sorted(cls.per_class) == [(0.5, 0.5, 1), (0.5, 1.0, 1)]
    cls = C.classify(C.bsc(0.1))
    assert cls.column_constants is None and cls.per_class is None
    json.dumps(C.classify(C.asym_example()).to_json())
