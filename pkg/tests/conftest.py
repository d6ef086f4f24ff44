import numpy as np
import pytest

from perfexpect.corpus import MeterSpan, Note, Piece


def make_piece(events, pid="p", bar=4.0, classification="duple", anacrusis=0.0, meters=None):
    """events: (onset_beats, midi_pitch, is_melody, perf_onset_sec, velocity) tuples."""
    notes = tuple(Note(float(o), 1.0, int(p), bool(m), float(t), int(v))
                  for o, p, m, t, v in events)
    notes = tuple(sorted(notes, key=lambda n: (n.onset_beats, n.midi_pitch)))
    meters = meters or (MeterSpan(0.0, bar, classification),)
    return Piece(pid, notes, tuple(meters), anacrusis)


def melody_piece(pitches, pid="m", period=0.5, chord=None):
    events = []
    for i, p in enumerate(pitches):
        events.append((i, p, True, i * period, 64))
        for q in (chord or []):
            events.append((i, p - q, False, i * period, 50))
    return make_piece(events, pid)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
