"""Expressive parameters per score onset: beat period ratio, velocity, derivatives."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import OnsetSequence
from .errors import DegeneratePerformanceError, SizeError

TARGET_KINDS = ("bpr", "bpr_d", "vel", "vel_d")
_DERIVED = {"bpr": "bpr_d", "vel": "vel_d"}


@dataclass(frozen=True)
class TargetSeries:
    kind: str
    values: np.ndarray
    piece_id: str = ""

    def __len__(self):
        return len(self.values)


def beat_periods(seq: OnsetSequence) -> np.ndarray:
    """Local seconds-per-beat by forward difference, last value repeated."""
    if len(seq) < 2:
        raise SizeError(f"{seq.piece_id}: need at least 2 onset groups, got {len(seq)}")
    beats = seq.onset_beats
    times = seq.perf_onsets
    periods = np.diff(times) / np.diff(beats)
    bad = np.flatnonzero(periods <= 0)
    if bad.size:
        raise DegeneratePerformanceError(
            f"{seq.piece_id}: non-increasing performed onsets after group {int(bad[0])}")
    return np.append(periods, periods[-1])


def compute_bpr(seq: OnsetSequence) -> TargetSeries:
    periods = beat_periods(seq)
    return TargetSeries("bpr", periods / periods.mean(), seq.piece_id)


def compute_vel(seq: OnsetSequence) -> TargetSeries:
    return TargetSeries("vel", seq.max_velocities / 127.0, seq.piece_id)


def differentiate(series: TargetSeries) -> TargetSeries:
    """Forward difference with a zero appended so lengths match."""
    if len(series) < 2:
        raise SizeError(f"{series.piece_id}: cannot differentiate a series of length {len(series)}")
    kind = _DERIVED.get(series.kind, series.kind + "_d")
    return TargetSeries(kind, np.append(np.diff(series.values), 0.0), series.piece_id)


def compute_target(seq: OnsetSequence, kind: str) -> TargetSeries:
    if kind == "bpr":
        return compute_bpr(seq)
    if kind == "bpr_d":
        return differentiate(compute_bpr(seq))
    if kind == "vel":
        return compute_vel(seq)
    if kind == "vel_d":
        return differentiate(compute_vel(seq))
    raise ValueError(f"unknown target kind {kind!r}")


def all_targets(seq: OnsetSequence) -> dict:
    bpr = compute_bpr(seq)
    vel = compute_vel(seq)
    return {"bpr": bpr, "bpr_d": differentiate(bpr), "vel": vel, "vel_d": differentiate(vel)}
