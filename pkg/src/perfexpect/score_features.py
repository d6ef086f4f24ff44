"""Low-level score descriptors per onset group: pitch extremes, vertical
interval classes above the bass, and metrical position/strength."""
from __future__ import annotations

from typing import Tuple

import numpy as np

from .corpus import MeterSpan, OnsetGroup, Piece, group_by_onset
from .errors import CoverageError
from .features import SCORE_COLUMNS, FeatureMatrix

_PHASE_TOL = 1e-9


def pitch_features(group: OnsetGroup) -> Tuple[float, float, float]:
    pitches = group.pitches
    melody = group.melody_note
    pitch_m = melody.midi_pitch / 127.0 if melody is not None else 0.0
    return max(pitches) / 127.0, min(pitches) / 127.0, pitch_m


def interval_classes(pitches) -> Tuple[int, ...]:
    """Ascending distinct interval classes (1..11) above the lowest pitch."""
    bass = min(pitches)
    return tuple(sorted({(p - bass) % 12 for p in pitches} - {0}))


def vic_features(group: OnsetGroup) -> Tuple[float, float, float]:
    classes = interval_classes(group.pitches)[:3]
    padded = list(classes) + [0] * (3 - len(classes))
    return tuple(c / 11.0 for c in padded)


def metrical_features(onset_beats: float, anacrusis_beats: float,
                      meter: MeterSpan) -> Tuple[float, int, int, int]:
    """Bar phase and one-hot metrical strength (downbeat, secondary, weak).

    The first span (start 0) also covers a pickup before the first barline.
    """
    t = onset_beats - anacrusis_beats - meter.start_beat
    if t < -_PHASE_TOL and meter.start_beat != 0:
        raise CoverageError(f"onset {onset_beats} lies before meter span at {meter.start_beat}")
    bar = meter.bar_length_beats
    phase = (t % bar) / bar
    if phase > 1 - _PHASE_TOL or phase < _PHASE_TOL:
        phase = 0.0
    if phase == 0.0:
        return phase, 1, 0, 0
    if abs(phase - 0.5) < _PHASE_TOL and meter.classification in ("duple", "compound-duple"):
        return phase, 0, 1, 0
    return phase, 0, 0, 1


def assemble_score_matrix(piece: Piece) -> FeatureMatrix:
    rows = []
    for g in group_by_onset(piece).groups:
        meter = piece.meter_at(g.onset_beats)
        rows.append(pitch_features(g) + vic_features(g)
                    + metrical_features(g.onset_beats, piece.anacrusis_beats, meter))
    return FeatureMatrix(piece.id, SCORE_COLUMNS, np.array(rows, dtype=float), "S")
