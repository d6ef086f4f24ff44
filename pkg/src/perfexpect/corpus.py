"""
Data model for aligned score/performance pieces and the JSON corpus format.

A corpus file looks like::

    {"pieces": [{"id": "k331-1",
                 "anacrusis_beats": 0,
                 "meters": [{"start_beat": 0, "bar_length_beats": 3,
                             "classification": "compound-duple"}],
                 "notes": [{"onset_beats": 0, "duration_beats": 1,
                            "midi_pitch": 69, "is_melody": true,
                            "perf_onset_sec": 0.0, "perf_velocity": 64}]}]}

Every note must already be aligned to its performed onset and velocity.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CorpusParseError, ValidationError

METER_CLASSES = ("duple", "compound-duple", "other")


@dataclass(frozen=True)
class Note:
    onset_beats: float
    duration_beats: float
    midi_pitch: int
    is_melody: bool
    perf_onset_sec: float
    perf_velocity: int


@dataclass(frozen=True)
class MeterSpan:
    start_beat: float
    bar_length_beats: float
    classification: str = "other"


@dataclass(frozen=True)
class Piece:
    id: str
    notes: Tuple[Note, ...]
    meters: Tuple[MeterSpan, ...]
    anacrusis_beats: float = 0.0

    def meter_at(self, onset_beats: float) -> MeterSpan:
        """Active meter span for a (notated) onset.

        Spans live on the anacrusis-shifted axis. The first span also covers
        the pickup, which sits at negative shifted positions.
        """
        t = onset_beats - self.anacrusis_beats
        active = self.meters[0]
        for span in self.meters[1:]:
            if span.start_beat <= t:
                active = span
            else:
                break
        return active


@dataclass(frozen=True)
class OnsetGroup:
    onset_beats: float
    notes: Tuple[Note, ...]
    mean_perf_onset_sec: float
    max_velocity: int

    @property
    def pitches(self) -> List[int]:
        return [n.midi_pitch for n in self.notes]

    @property
    def melody_note(self) -> Optional[Note]:
        for n in self.notes:
            if n.is_melody:
                return n
        return None


@dataclass(frozen=True)
class OnsetSequence:
    piece_id: str
    groups: Tuple[OnsetGroup, ...]

    def __len__(self):
        return len(self.groups)

    @property
    def onset_beats(self) -> np.ndarray:
        return np.array([g.onset_beats for g in self.groups], dtype=float)

    @property
    def perf_onsets(self) -> np.ndarray:
        return np.array([g.mean_perf_onset_sec for g in self.groups], dtype=float)

    @property
    def max_velocities(self) -> np.ndarray:
        return np.array([g.max_velocity for g in self.groups], dtype=float)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    message: str
    piece_id: str = ""
    field: str = ""

    def __str__(self):
        where = self.piece_id + (f".{self.field}" if self.field else "")
        return f"{self.severity}: {where}: {self.message}"


def _sort_key(note: Note):
    return (note.onset_beats, note.midi_pitch)


def validate_piece(piece: Piece) -> List[Diagnostic]:
    """Check every Piece invariant.

    Returns an empty list iff all invariants hold. Fixable problems (note
    order, non-monotone performance) are warnings; the rest are errors.
    """
    diags = []

    def err(msg, fld=""):
        diags.append(Diagnostic("error", msg, piece.id, fld))

    def warn(msg, fld=""):
        diags.append(Diagnostic("warning", msg, piece.id, fld))

    if not piece.id:
        err("empty piece id", "id")
    if piece.anacrusis_beats < 0:
        err("anacrusis must be >= 0", "anacrusis_beats")

    for i, n in enumerate(piece.notes):
        fld = f"notes[{i}]"
        if not 0 <= n.midi_pitch <= 127:
            err("pitch out of range", fld + ".midi_pitch")
        if not 1 <= n.perf_velocity <= 127:
            err("velocity out of range", fld + ".perf_velocity")
        if not n.duration_beats > 0:
            err("duration must be > 0", fld + ".duration_beats")
        if not n.perf_onset_sec >= 0:
            err("performed onset must be >= 0", fld + ".perf_onset_sec")
        if not (np.isfinite(n.onset_beats) and np.isfinite(n.perf_onset_sec)):
            err("non-finite time value", fld)

    if not piece.meters:
        err("no meter spans", "meters")
    else:
        if piece.meters[0].start_beat != 0:
            err("first meter span must start at 0", "meters[0].start_beat")
        for i, m in enumerate(piece.meters):
            if not m.bar_length_beats > 0:
                err("bar length must be > 0", f"meters[{i}].bar_length_beats")
            if m.classification not in METER_CLASSES:
                err(f"unknown meter classification {m.classification!r}",
                    f"meters[{i}].classification")
            if i and m.start_beat <= piece.meters[i - 1].start_beat:
                err("meter spans not strictly increasing", f"meters[{i}].start_beat")

    keys = [_sort_key(n) for n in piece.notes]
    if keys != sorted(keys):
        warn("notes re-sorted", "notes")

    by_onset = {}
    for n in piece.notes:
        by_onset.setdefault(n.onset_beats, []).append(n)
    if len(by_onset) < 2:
        err("fewer than 2 distinct onsets", "notes")
    for onset, members in by_onset.items():
        if sum(n.is_melody for n in members) > 1:
            err(f"duplicate melody note at onset {onset}", "notes")
        pitches = [n.midi_pitch for n in members]
        if len(set(pitches)) != len(pitches):
            err(f"duplicate pitch at onset {onset}", "notes")

    means = [np.mean([n.perf_onset_sec for n in by_onset[o]]) for o in sorted(by_onset)]
    if any(b < a for a, b in zip(means, means[1:])):
        warn("performance onsets not monotone", "notes")
    return diags


def group_by_onset(piece: Piece) -> OnsetSequence:
    """Partition the notes of a piece by exact score onset."""
    buckets = {}
    for n in piece.notes:
        buckets.setdefault(n.onset_beats, []).append(n)
    groups = []
    for onset in sorted(buckets):
        members = tuple(sorted(buckets[onset], key=_sort_key))
        groups.append(OnsetGroup(
            onset_beats=onset,
            notes=members,
            mean_perf_onset_sec=float(np.mean([n.perf_onset_sec for n in members])),
            max_velocity=max(n.perf_velocity for n in members),
        ))
    return OnsetSequence(piece.id, tuple(groups))


def _require(obj, key, kind, where):
    if key not in obj:
        raise ValidationError(f"missing field {key!r}", where, key)
    value = obj[key]
    if kind is bool:
        ok = isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ValidationError(f"field {key!r} has wrong type", where, key)
    return value


def _piece_from_obj(obj, index) -> Piece:
    if not isinstance(obj, dict):
        raise ValidationError(f"piece #{index} is not an object", str(index))
    pid = _require(obj, "id", str, str(index))
    notes = []
    for i, n in enumerate(_require(obj, "notes", list, pid)):
        if not isinstance(n, dict):
            raise ValidationError("note is not an object", pid, f"notes[{i}]")
        notes.append(Note(
            onset_beats=float(_require(n, "onset_beats", float, pid)),
            duration_beats=float(_require(n, "duration_beats", float, pid)),
            midi_pitch=_require(n, "midi_pitch", int, pid),
            is_melody=_require(n, "is_melody", bool, pid),
            perf_onset_sec=float(_require(n, "perf_onset_sec", float, pid)),
            perf_velocity=_require(n, "perf_velocity", int, pid),
        ))
    meters = []
    for i, m in enumerate(_require(obj, "meters", list, pid)):
        if not isinstance(m, dict):
            raise ValidationError("meter is not an object", pid, f"meters[{i}]")
        meters.append(MeterSpan(
            start_beat=float(_require(m, "start_beat", float, pid)),
            bar_length_beats=float(_require(m, "bar_length_beats", float, pid)),
            classification=_require(m, "classification", str, pid),
        ))
    anacrusis = float(obj["anacrusis_beats"]) if "anacrusis_beats" in obj else 0.0
    return Piece(pid, tuple(notes), tuple(meters), anacrusis)


def load_raw(raw: Union[bytes, str]) -> List[Piece]:
    """Decode a corpus without validating or re-sorting."""
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorpusParseError(f"corpus is not UTF-8: {exc}", offset=exc.start)
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(
            f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
            line=exc.lineno, offset=exc.pos)
    if not isinstance(doc, dict) or not isinstance(doc.get("pieces"), list):
        raise CorpusParseError('top level must be {"pieces": [...]}', line=1, offset=0)
    return [_piece_from_obj(p, i) for i, p in enumerate(doc["pieces"])]


def normalize_piece(piece: Piece) -> Piece:
    """Validate a piece, raising on errors, and return it with notes sorted."""
    for d in validate_piece(piece):
        if d.severity == "error":
            raise ValidationError(d.message, d.piece_id, d.field)
    notes = tuple(sorted(piece.notes, key=_sort_key))
    return Piece(piece.id, notes, piece.meters, piece.anacrusis_beats)


def parse_corpus(raw: Union[bytes, str]) -> List[Piece]:
    """Parse and validate a JSON corpus; pieces come back in file order."""
    pieces = [normalize_piece(p) for p in load_raw(raw)]
    seen = set()
    for p in pieces:
        if p.id in seen:
            raise ValidationError("duplicate piece id", p.id, "id")
        seen.add(p.id)
    return pieces


def read_corpus(path) -> List[Piece]:
    with open(path, "rb") as fh:
        return parse_corpus(fh.read())


def _num(x: float):
    return int(x) if float(x).is_integer() else x


def piece_to_obj(piece: Piece) -> dict:
    return {
        "id": piece.id,
        "anacrusis_beats": _num(piece.anacrusis_beats),
        "meters": [{"start_beat": _num(m.start_beat),
                    "bar_length_beats": _num(m.bar_length_beats),
                    "classification": m.classification} for m in piece.meters],
        "notes": [{"onset_beats": _num(n.onset_beats),
                   "duration_beats": _num(n.duration_beats),
                   "midi_pitch": n.midi_pitch,
                   "is_melody": n.is_melody,
                   "perf_onset_sec": n.perf_onset_sec,
                   "perf_velocity": n.perf_velocity} for n in piece.notes],
    }


def dump_corpus(pieces: Iterable[Piece], indent: Optional[int] = None) -> str:
    return json.dumps({"pieces": [piece_to_obj(p) for p in pieces]}, indent=indent)


def write_corpus(pieces: Sequence[Piece], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_corpus(pieces, indent=1))
        fh.write("\n")
