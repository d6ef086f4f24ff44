import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from perfexpect.errors import ModelError, TrainingError
from perfexpect.expectancy import ContextModel, ppm_predict, ppm_train

from oracles import brute_ppm


def test_single_symbol_order0():
    m = ppm_train([list("aaaa")], max_order=0, alphabet="ab")
    d = ppm_predict(m, list("aaaa"))
    assert d["a"] == pytest.approx(4 / 5, abs=1e-12)
    assert d["b"] == pytest.approx(1 / 5, abs=1e-12)


def test_single_symbol_order1():
    # context (a,) saw a three times: 3/4, the escape 1/4 falls through to order 0
    # where a is excluded, leaving b only
    m = ppm_train([list("aaaa")], max_order=1, alphabet="ab")
    d = ppm_predict(m, ["a"])
    assert d["a"] == pytest.approx(3 / 4, abs=1e-12)
    assert d["b"] == pytest.approx(1 / 4, abs=1e-12)


def test_untrained_model_is_uniform():
    m = ContextModel(2, alphabet="ab")
    d = ppm_predict(m, ["a", "b"])
    assert d["a"] == d["b"] == 0.5


def test_unseen_context_skips_to_shorter():
    m = ppm_train([list("abab")], max_order=2, alphabet="abc")
    # context (c, a) is unseen; (a,) is followed by b twice
    d = ppm_predict(m, ["c", "a"])
    assert d["b"] == pytest.approx(2 / 3, abs=1e-12)
    assert d["a"] + d["c"] == pytest.approx(1 / 3, abs=1e-12)


def test_empty_alphabet_and_bad_order():
    with pytest.raises(ModelError):
        ContextModel(1).predict([])
    with pytest.raises(TrainingError):
        ContextModel(-1)
    with pytest.raises(TrainingError):
        ppm_train([])


def test_matches_oracle_on_a_melody():
    seq = [60, 62, 64, 62, 60, 62, 64, 65, 67, 65, 64, 62, 60]
    alphabet = list(range(58, 70))
    for order in range(4):
        m = ppm_train([seq], max_order=order, alphabet=alphabet)
        for i in range(len(seq) + 1):
            ctx = seq[max(0, i - 5):i]
            want = brute_ppm([seq], alphabet, ctx, order)
            got = m.predict(ctx)
            assert max(abs(got[s] - float(want[s])) for s in alphabet) < 1e-12


seqs = st.lists(st.lists(st.sampled_from("abcde"), min_size=1, max_size=8), min_size=1, max_size=3)


@settings(max_examples=150, deadline=None)
@given(seqs, st.integers(0, 4), st.lists(st.sampled_from("abcdef"), max_size=5))
def test_random_against_oracle(training, order, context):
    alphabet = "abcdef"
    m = ppm_train(training, max_order=order, alphabet=alphabet)
    d = m.predict(context)
    want = brute_ppm(training, alphabet, context, order)
    assert abs(sum(d.p) - 1) < 1e-12
    assert np.all(d.p > 0)
    assert max(abs(d[s] - float(want[s])) for s in alphabet) < 1e-12


@settings(max_examples=60, deadline=None)
@given(seqs, st.integers(0, 3))
def test_more_evidence_raises_probability(training, order):
    m = ppm_train(training, max_order=order, alphabet="abcde")
    ctx = list(training[0][-order:]) if order else []
    table = m.counts.get(tuple(ctx))
    assume(table)
    before = m.predict(ctx)
    # a novel symbol also bumps the escape count, so only seen ones must rise
    sym = min(table, key=lambda s: before[s])
    m.add_event(ctx, sym)
    assert m.predict(ctx)[sym] > before[sym]


def test_incremental_equals_batch():
    a, b = list("abcabd"), list("dcba")
    batch = ppm_train([a, b], max_order=2)
    inc = ContextModel(2)
    inc.add_sequence(a)
    inc.add_sequence(b)
    assert inc == batch


def test_serialization_roundtrip_with_tuples_and_none():
    seq = [None, (4, 7), (3,), (), "UNSEEN", (4, 7)]
    m = ppm_train([seq], max_order=2)
    text = json.dumps(m.to_dict(), sort_keys=True)
    back = ContextModel.from_dict(json.loads(text))
    assert back == m
    assert json.dumps(back.to_dict(), sort_keys=True) == text
    for i in range(len(seq)):
        np.testing.assert_array_equal(back.predict_array(seq[:i]), m.predict_array(seq[:i]))


def test_copy_is_independent():
    m = ppm_train([list("abc")], max_order=1)
    c = m.copy()
    c.add_sequence(list("ccc"))
    assert c != m
    assert m.predict(["c"])["c"] < c.predict(["c"])["c"]


def test_ic_of_certain_pattern_is_small():
    seq = [1, 2, 3] * 30
    m = ppm_train([seq], max_order=2)
    assert -math.log2(m.predict([1, 2])[3]) < 0.05
