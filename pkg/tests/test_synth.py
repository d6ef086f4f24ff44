import numpy as np
import pytest

from perfexpect.corpus import dump_corpus, group_by_onset, validate_piece
from perfexpect.errors import ConfigurationError
from perfexpect.evaluation import pearson_r
from perfexpect.expectancy import ExpectancyModel
from perfexpect.score_features import assemble_score_matrix
from perfexpect.synth import synth_corpus
from perfexpect.targets import compute_target


def test_deterministic_and_valid():
    a = synth_corpus(5, 30, 40, seed=7)
    assert dump_corpus(a) == dump_corpus(synth_corpus(5, 30, 40, seed=7))
    assert dump_corpus(a) != dump_corpus(synth_corpus(5, 30, 40, seed=8))
    for p in a:
        assert not [d for d in validate_piece(p) if d.severity == "error"]
        assert 30 <= len(group_by_onset(p).groups) <= 40


def test_linear_rule_is_exact():
    for piece in synth_corpus(4, 30, 40, seed=1, rule="linear"):
        s = assemble_score_matrix(piece).rows
        vel = compute_target(group_by_onset(piece), "vel").values
        np.testing.assert_allclose(vel * 127, s[:, 0] * 127 - 10 + 20 * s[:, 7], atol=1e-9)


def test_permuted_rule_keeps_values():
    lin = synth_corpus(3, 30, 40, seed=1, rule="linear")
    perm = synth_corpus(3, 30, 40, seed=1, rule="permuted")
    for a, b in zip(lin, perm):
        va = compute_target(group_by_onset(a), "vel").values
        vb = compute_target(group_by_onset(b), "vel").values
        assert sorted(va) == sorted(vb)
        assert not np.array_equal(va, vb)


def test_ic_tempo_follows_surprise():
    pieces = synth_corpus(6, 40, 60, seed=0, rule="ic_tempo")
    model = ExpectancyModel.fit(pieces)
    for p in pieces:
        ic_m = model.features(p).rows[:, 0]
        d = compute_target(group_by_onset(p), "bpr_d").values
        # forward difference: d[i] is the period change caused by the event at i
        assert pearson_r(ic_m[:-2], d[:-2]) > 0.999


def test_bad_parameters():
    with pytest.raises(ConfigurationError):
        synth_corpus(rule="loud")
    with pytest.raises(ConfigurationError):
        synth_corpus(n_pieces=0)
    with pytest.raises(ConfigurationError):
        synth_corpus(min_len=10, max_len=5)
