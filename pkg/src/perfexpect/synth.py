"""
Deterministic synthetic corpora with known score-to-performance rules.

Melodies are stitched from a corpus-wide bank of short motifs (learnable,
low surprise) with occasional random leaps (high surprise), over sparse
chordal accompaniment. Rules for the performance:

``linear``
    melody velocity = highest pitch - 10 + 20 * downbeat, so VEL is an exact
    linear function of ``pitch_h`` and ``b_d``; tempo wanders smoothly.
``permuted``
    as ``linear`` with velocities shuffled across onsets inside each piece.
``ic_tempo``
    local beat period changes by ``kappa * (IC_m - mean IC_m)`` after every
    onset, so BPR_d is an increasing linear function of melodic IC: the
    player slows after unexpected notes. IC comes from a model fitted to the
    whole generated corpus.
``random``
    smooth random tempo and dynamics unrelated to the score.
"""
from __future__ import annotations

from typing import List

import numpy as np

from .corpus import MeterSpan, Note, Piece, group_by_onset
from .errors import ConfigurationError

RULES = ("linear", "permuted", "ic_tempo", "random")

_METERS = [(4.0, "duple"), (3.0, "other"), (3.0, "compound-duple"), (2.0, "duple")]
_CHORDS = [(), (12,), (4, 7), (3, 7), (4, 7, 10), (7,), (3, 8), (5, 9)]
_DURATIONS = np.array([0.5, 1.0, 1.0, 1.0, 1.5, 2.0])
_BASE_PERIOD = 0.5  # seconds per beat


def _motif_bank(rng, size=6, length=4):
    steps = np.array([-2, -1, 1, 2, 0, 3, -3])
    return [np.concatenate([[0], np.cumsum(rng.choice(steps, length - 1))]) for _ in range(size)]


def _melody(rng, n, bank, leap_prob=0.15):
    out = []
    pitch = int(rng.integers(64, 77))
    while len(out) < n:
        if out and rng.random() < leap_prob:
            pitch = int(np.clip(pitch + rng.choice([-9, -7, -6, 6, 8, 11]), 60, 84))
            out.append(pitch)
            continue
        motif = bank[int(rng.integers(len(bank)))]
        start = pitch if not out else pitch + int(rng.choice([-2, 2, 1, -1]))
        start = int(np.clip(start, 62 - motif.min(), 82 - motif.max()))
        for step in motif:
            out.append(start + int(step))
        pitch = out[-1]
    return out[:n]


def _smooth_walk(rng, n, scale, rho=0.8):
    x = np.zeros(n)
    for i in range(1, n):
        x[i] = rho * x[i - 1] + scale * rng.normal()
    return x


def _score(rng, pid, n, bank):
    bar, cls = _METERS[int(rng.integers(len(_METERS)))]
    anacrusis = float(rng.choice([0.0, 0.0, 1.0]))
    onsets = np.concatenate([[0.0], np.cumsum(rng.choice(_DURATIONS, n - 1))])
    durations = np.append(np.diff(onsets), 1.0)
    melody = _melody(rng, n, bank)
    chords = []
    for i in range(n):
        if rng.random() < 0.6:
            bass = melody[i] - 12 - int(rng.integers(0, 8))
            chords.append([bass + iv for iv in (0,) + _CHORDS[int(rng.integers(len(_CHORDS)))]
                           if bass + iv < melody[i]])
        else:
            chords.append([])
    meters = (MeterSpan(0.0, bar, cls),)
    return onsets, durations, melody, chords, meters, anacrusis


def _build(pid, onsets, durations, melody, chords, meters, anacrusis, times, velocities):
    notes = []
    for i in range(len(onsets)):
        v = int(velocities[i])
        notes.append(Note(float(onsets[i]), float(durations[i]), int(melody[i]), True,
                          float(times[i]), v))
        for p in chords[i]:
            notes.append(Note(float(onsets[i]), float(durations[i]), int(p), False,
                              float(times[i]), max(1, v - 12)))
    notes.sort(key=lambda n: (n.onset_beats, n.midi_pitch))
    return Piece(pid, tuple(notes), meters, anacrusis)


def _times(onsets, periods):
    return np.concatenate([[0.0], np.cumsum(periods * np.diff(onsets))])


def _linear_velocities(onsets, melody, anacrusis, meters):
    bar = meters[0].bar_length_beats
    out = []
    for t, p in zip(onsets, melody):
        downbeat = ((t - anacrusis) % bar) == 0
        out.append(p - 10 + 20 * downbeat)
    return np.array(out)


def synth_corpus(n_pieces: int = 20, min_len: int = 60, max_len: int = 120, seed: int = 0,
                 rule: str = "linear", kappa: float = 0.02) -> List[Piece]:
    if rule not in RULES:
        raise ConfigurationError(f"unknown synthesis rule {rule!r}")
    if n_pieces < 1 or min_len < 2 or max_len < min_len:
        raise ConfigurationError("need n_pieces >= 1 and 2 <= min_len <= max_len")
    rng = np.random.default_rng(seed)
    bank = _motif_bank(rng)
    scores = []
    for k in range(n_pieces):
        n = int(rng.integers(min_len, max_len + 1))
        scores.append((f"synth-{k:03d}",) + _score(rng, f"synth-{k:03d}", n, bank))

    pieces = []
    for pid, onsets, durations, melody, chords, meters, anacrusis in scores:
        n = len(onsets)
        periods = _BASE_PERIOD * np.exp(_smooth_walk(rng, n - 1, 0.03))
        if rule in ("linear", "permuted"):
            vel = _linear_velocities(onsets, melody, anacrusis, meters)
            if rule == "permuted":
                vel = rng.permutation(vel)
        else:
            vel = np.clip(np.round(64 + _smooth_walk(rng, n, 4.0)), 20, 120)
        pieces.append(_build(pid, onsets, durations, melody, chords, meters, anacrusis,
                             _times(onsets, periods), vel))

    if rule == "ic_tempo":
        pieces = _apply_ic_tempo(pieces, kappa)
    return pieces


def _apply_ic_tempo(pieces, kappa):
    from .expectancy import ExpectancyModel

    model = ExpectancyModel.fit(pieces)
    out = []
    for piece in pieces:
        ic_m = model.features(piece).rows[:, 0]
        seq = group_by_onset(piece)
        onsets = seq.onset_beats
        n = len(onsets)
        drive = ic_m[:n - 2] - ic_m[:n - 2].mean()
        k = kappa
        while True:
            periods = _BASE_PERIOD * (1.0 + k * np.concatenate([[0.0], np.cumsum(drive)]))
            if periods.min() > 0.25 * _BASE_PERIOD:
                break
            k /= 2
        times = _times(onsets, periods)
        at = {o: t for o, t in zip(onsets, times)}
        notes = tuple(Note(nt.onset_beats, nt.duration_beats, nt.midi_pitch, nt.is_melody,
                           float(at[nt.onset_beats]), nt.perf_velocity) for nt in piece.notes)
        out.append(Piece(piece.id, notes, piece.meters, piece.anacrusis_beats))
    return out
