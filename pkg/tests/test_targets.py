import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from perfexpect.corpus import group_by_onset
from perfexpect.errors import DegeneratePerformanceError, SizeError
from perfexpect.targets import (TargetSeries, compute_bpr, compute_target, compute_vel,
                                differentiate)

from conftest import make_piece


def seq_from(beats, times, vels=None):
    vels = vels or [64] * len(beats)
    return group_by_onset(make_piece([(b, 60, True, t, v) for b, t, v in zip(beats, times, vels)]))


def test_constant_tempo():
    bpr = compute_bpr(seq_from([0, 1, 2, 3], [0, 0.5, 1.0, 1.5]))
    np.testing.assert_allclose(bpr.values, 1.0, atol=1e-15)


def test_bpr_hand_example():
    # periods 0.5, 0.5, 0.75 and the repeated last 0.75; their mean is 2.5 / 4 = 0.625
    bpr = compute_bpr(seq_from([0, 1, 2, 4], [0, 0.5, 1.0, 2.5]))
    np.testing.assert_allclose(bpr.values, [0.8, 0.8, 1.2, 1.2], atol=1e-12)


def test_zero_slope_is_degenerate():
    with pytest.raises(DegeneratePerformanceError):
        compute_bpr(seq_from([0, 1], [0, 0]))


def test_single_group_size_error():
    seq = group_by_onset(make_piece([(0, 60, 0, 0, 60), (0, 64, 0, 0, 60), (1, 60, 0, 1, 60)]))
    one = type(seq)(seq.piece_id, seq.groups[:1])
    with pytest.raises(SizeError):
        compute_bpr(one)


def test_vel_examples():
    seq = group_by_onset(make_piece([(0, 60, 0, 0, 40), (0, 64, 0, 0, 80), (0, 67, 0, 0, 60),
                                     (1, 60, 0, 1, 127)]))
    vel = compute_vel(seq).values
    assert vel[0] == pytest.approx(80 / 127)
    assert vel[1] == 1.0
    np.testing.assert_allclose(compute_vel(seq_from([0, 1], [0, 1], [64, 32])).values,
                               [0.5039, 0.2520], atol=1e-4)


def test_differentiate_examples():
    assert differentiate(TargetSeries("bpr", np.ones(3))).values.tolist() == [0, 0, 0]
    d = differentiate(TargetSeries("vel", np.array([0.5, 0.75, 0.6])))
    np.testing.assert_allclose(d.values, [0.25, -0.15, 0.0], atol=1e-15)
    assert d.kind == "vel_d"
    with pytest.raises(SizeError):
        differentiate(TargetSeries("bpr", np.array([1.0])))


beats_times = st.lists(st.tuples(st.integers(1, 4).map(lambda x: x / 2),
                                 st.floats(0.05, 3.0)), min_size=1, max_size=30)


@settings(max_examples=80, deadline=None)
@given(beats_times, st.floats(0.1, 10.0))
def test_bpr_mean_one_and_tempo_invariance(steps, scale):
    beats = np.concatenate([[0], np.cumsum([s[0] for s in steps])])
    times = np.concatenate([[0], np.cumsum([s[0] * s[1] for s in steps])])
    bpr = compute_bpr(seq_from(beats, times)).values
    assert abs(bpr.mean() - 1) < 1e-12
    assert np.all(bpr > 0)
    scaled = compute_bpr(seq_from(beats, times * scale)).values
    np.testing.assert_allclose(scaled, bpr, rtol=1e-9)
    d = compute_target(seq_from(beats, times), "bpr_d").values
    assert d[-1] == 0
    assert d.sum() == pytest.approx(bpr[-1] - bpr[0], abs=1e-12)
