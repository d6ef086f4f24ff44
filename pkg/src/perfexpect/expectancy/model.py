"""
Multiple-viewpoint expectancy model.

Melody: one PPM model per selected viewpoint (chromatic pitch, pitch
interval, contour), each prediction mapped back onto pitches and merged by
an entropy-weighted geometric mean. Harmony: one PPM model over the tuple of
vertical interval classes above the bass at each onset.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..corpus import Piece, group_by_onset
from ..errors import DomainError, EmptyMelodyError, ModelError, TrainingError
from ..features import EXPECTANCY_COLUMNS, FeatureMatrix
from ..score_features import interval_classes
from .distributions import P_FLOOR, combine_rows, entropy_rows
from .ppm import ContextModel, ppm_train
from .symbols import UNSEEN
from .viewpoints import Viewpoint, get_viewpoint, to_basic

log = logging.getLogger(__name__)

FORMAT = "perfexpect-expectancy"
VERSION = 1


@dataclass(frozen=True)
class SymbolSequence:
    alphabet_id: str
    symbols: tuple
    onset_index: tuple = ()  # position -> onset-group index

    def __len__(self):
        return len(self.symbols)


@dataclass(frozen=True)
class ViewpointSystem:
    selected: Tuple[Viewpoint, ...]
    combination_bias: float = 1.0

    def __post_init__(self):
        names = [v.name for v in self.selected]
        if not names:
            raise TrainingError("a viewpoint system needs at least one viewpoint")
        if len(set(names)) != len(names):
            raise TrainingError("duplicate viewpoints in system")

    @property
    def names(self):
        return [v.name for v in self.selected]


@dataclass
class ExpectancyConfig:
    max_order: int = 3
    stm: bool = False
    bias: float = 1.0
    selection_threshold: float = 0.01
    selection_folds: int = 3
    candidates: Tuple[str, ...] = ("cpitch", "cpint", "contour")


def encode_melody(piece: Piece) -> SymbolSequence:
    pitches, where = [], []
    for i, g in enumerate(group_by_onset(piece).groups):
        m = g.melody_note
        if m is not None:
            pitches.append(m.midi_pitch)
            where.append(i)
    if not pitches:
        raise EmptyMelodyError(f"{piece.id}: no melody notes")
    return SymbolSequence("cpitch", tuple(pitches), tuple(where))


def encode_harmony(piece: Piece) -> SymbolSequence:
    groups = group_by_onset(piece).groups
    return SymbolSequence("vic_tuple", tuple(interval_classes(g.pitches) for g in groups),
                          tuple(range(len(groups))))


def viewpoint_matrix(vp: Viewpoint, ltm: ContextModel, pitches: Sequence[int],
                     basic: Sequence[int], stm: bool = False, bias: float = 1.0) -> np.ndarray:
    """Pitch distribution at every position of ``pitches`` under one viewpoint."""
    derived = vp.derive(pitches)
    order = ltm.max_order
    short = ContextModel(order, ltm.alphabet) if stm else None
    rows = np.empty((len(pitches), len(basic)))
    for i in range(len(pitches)):
        ctx = derived[max(0, i - order):i]
        p = ltm.predict_array(ctx)
        if short is not None:
            p = combine_rows(np.stack([p, short.predict_array(ctx)]), bias)
            short.add_event(ctx, derived[i])
        rows[i] = to_basic(vp, p, ltm._index, pitches[i - 1] if i else None, basic)
    return rows


def _check_pitches(pitches, basic_index, what):
    for p in pitches:
        if p not in basic_index:
            raise DomainError(f"{what}: melody pitch {p} outside the model's pitch alphabet")


def _train_viewpoint(vp, sequences, max_order, basic):
    return ppm_train([vp.derive(s) for s in sequences], max_order, vp.alphabet(basic))


def cross_entropy(stack: np.ndarray, observed: np.ndarray, bias: float) -> float:
    p = combine_rows(stack, bias)
    hit = p[np.arange(len(observed)), observed]
    return float(np.mean(-np.log2(np.maximum(hit, P_FLOOR))))


def stepwise_select(training: Sequence[Sequence[int]], candidates: Sequence,
                    folds: int = 3, max_order: int = 3, bias: float = 1.0,
                    threshold: float = 0.01, basic: Optional[Sequence[int]] = None,
                    stm: bool = False):
    """Forward selection of melodic viewpoints by held-out cross entropy.

    Returns ``(ViewpointSystem, trace)`` where ``trace`` lists the mean
    per-symbol cross entropy (bits) after each accepted step.
    """
    seqs = [tuple(s) for s in training]
    if len(seqs) < 2:
        raise TrainingError("stepwise selection needs at least 2 training sequences")
    if all(len(s) < 2 for s in seqs):
        raise TrainingError("all training sequences are shorter than 2 events")
    if not candidates:
        raise TrainingError("no candidate viewpoints")
    cands = [get_viewpoint(c) for c in candidates]
    if basic is None:
        basic = pitch_alphabet(seqs)
    basic = tuple(basic)
    index = {p: i for i, p in enumerate(basic)}
    k = max(2, min(folds, len(seqs)))
    held = [[s for i, s in enumerate(seqs) if i % k == f] for f in range(k)]
    train = [[s for i, s in enumerate(seqs) if i % k != f] for f in range(k)]
    observed = np.array([index[p] for f in range(k) for s in held[f] for p in s])

    mats = []
    for vp in cands:
        rows = []
        for f in range(k):
            ltm = _train_viewpoint(vp, train[f], max_order, basic)
            rows.extend(viewpoint_matrix(vp, ltm, s, basic, stm, bias) for s in held[f])
        mats.append(np.vstack(rows))

    selected: List[int] = []
    trace: List[float] = []
    remaining = list(range(len(cands)))
    current = math.inf
    while remaining:
        scored = [(cross_entropy(np.stack([mats[j] for j in selected + [c]]), observed, bias), c)
                  for c in remaining]
        best, pick = min(scored, key=lambda t: (t[0], t[1]))
        if selected and current - best < threshold:
            break
        if any(cands[pick].name == cands[j].name for j in selected):
            break
        selected.append(pick)
        remaining.remove(pick)
        trace.append(best)
        current = best
        log.debug("selected %s, cross entropy %.4f bits", cands[pick].name, best)
    return ViewpointSystem(tuple(cands[j] for j in selected), bias), trace


def pitch_alphabet(sequences, extra=()) -> Tuple[int, ...]:
    pitches = [p for s in sequences for p in s] + list(extra)
    if not pitches:
        raise TrainingError("no pitches to build an alphabet from")
    return tuple(range(min(pitches), max(pitches) + 1))


class ExpectancyModel:
    """Trained melody and harmony models; immutable once fitted."""

    def __init__(self, config: ExpectancyConfig, basic: Tuple[int, ...],
                 system: ViewpointSystem, melody_models: Dict[str, ContextModel],
                 harmony_model: ContextModel, selection_trace=()):
        self.config = config
        self.basic = tuple(basic)
        self.system = system
        self.melody_models = melody_models
        self.harmony_model = harmony_model
        self.selection_trace = list(selection_trace)

    @classmethod
    def fit(cls, pieces: Sequence[Piece], config: Optional[ExpectancyConfig] = None,
            pitch_range: Sequence[int] = ()) -> "ExpectancyModel":
        """Train on ``pieces``; ``pitch_range`` widens the melody pitch alphabet."""
        config = config or ExpectancyConfig()
        if not pieces:
            raise TrainingError("no training pieces")
        melodies = []
        for p in pieces:
            try:
                melodies.append(encode_melody(p).symbols)
            except EmptyMelodyError:
                log.warning("%s has no melody; skipped for melody training", p.id)
        if not melodies:
            raise EmptyMelodyError("no training piece has a melody")
        basic = pitch_alphabet(melodies, pitch_range)
        cands = [get_viewpoint(c) for c in config.candidates]
        trace = []
        if len(cands) > 1 and len(melodies) >= 2 and any(len(m) >= 2 for m in melodies):
            system, trace = stepwise_select(
                melodies, cands, config.selection_folds, config.max_order, config.bias,
                config.selection_threshold, basic, config.stm)
        else:
            system = ViewpointSystem((cands[0],), config.bias)
        models = {vp.name: _train_viewpoint(vp, melodies, config.max_order, basic)
                  for vp in system.selected}
        harmonies = [encode_harmony(p).symbols for p in pieces]
        alphabet = {s for h in harmonies for s in h} | {(), UNSEEN}
        harmony = ppm_train(harmonies, config.max_order, alphabet)
        return cls(config, basic, system, models, harmony, trace)

    def melody_distributions(self, pitches: Sequence[int]) -> np.ndarray:
        _check_pitches(pitches, set(self.basic), "melody")
        stack = [viewpoint_matrix(vp, self.melody_models[vp.name], pitches, self.basic,
                                  self.config.stm, self.config.bias)
                 for vp in self.system.selected]
        return combine_rows(np.stack(stack), self.config.bias)

    def harmony_distributions(self, symbols: Sequence) -> Tuple[np.ndarray, List]:
        model = self.harmony_model
        known = set(model.alphabet)
        mapped = [s if s in known else UNSEEN for s in symbols]
        order = model.max_order
        short = ContextModel(order, model.alphabet) if self.config.stm else None
        rows = np.empty((len(mapped), len(model.alphabet)))
        for i in range(len(mapped)):
            ctx = mapped[max(0, i - order):i]
            p = model.predict_array(ctx)
            if short is not None:
                p = combine_rows(np.stack([p, short.predict_array(ctx)]), self.config.bias)
                short.add_event(ctx, mapped[i])
            rows[i] = p
        return rows, mapped

    def features(self, piece: Piece) -> FeatureMatrix:
        return expectancy_features(piece, self)

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "config": {**asdict(self.config), "candidates": list(self.config.candidates)},
            "pitch_alphabet": list(self.basic),
            "selected_viewpoints": self.system.names,
            "selection_trace": self.selection_trace,
            "melody_models": {k: m.to_dict() for k, m in self.melody_models.items()},
            "harmony_model": self.harmony_model.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ExpectancyModel":
        if obj.get("format") != FORMAT or obj.get("version") != VERSION:
            raise ModelError("not a version-1 expectancy model")
        cfg = dict(obj["config"])
        cfg["candidates"] = tuple(cfg["candidates"])
        config = ExpectancyConfig(**cfg)
        system = ViewpointSystem(tuple(get_viewpoint(n) for n in obj["selected_viewpoints"]),
                                 config.bias)
        models = {k: ContextModel.from_dict(m) for k, m in obj["melody_models"].items()}
        return cls(config, tuple(obj["pitch_alphabet"]), system, models,
                   ContextModel.from_dict(obj["harmony_model"]), obj.get("selection_trace", ()))


def expectancy_features(piece: Piece, model: ExpectancyModel) -> FeatureMatrix:
    """Per-onset IC and entropy (bits) of melody and harmony events.

    Onsets without a melody note repeat the last melody values (0 before the
    first melody note).
    """
    if model is None or not model.melody_models or model.harmony_model is None:
        raise ModelError("expectancy model is not trained")
    n = len(group_by_onset(piece).groups)
    out = np.zeros((n, 4))
    try:
        melody = encode_melody(piece)
    except EmptyMelodyError:
        melody = None
    if melody is not None:
        probs = model.melody_distributions(melody.symbols)
        index = {p: i for i, p in enumerate(model.basic)}
        hit = probs[np.arange(len(melody)), [index[p] for p in melody.symbols]]
        ic_m = -np.log2(np.maximum(hit, P_FLOOR))
        h_m = entropy_rows(probs)
        at = dict(zip(melody.onset_index, range(len(melody))))
        last = (0.0, 0.0)
        for i in range(n):
            if i in at:
                last = (ic_m[at[i]], h_m[at[i]])
            out[i, 0], out[i, 1] = last
    harmony = encode_harmony(piece)
    rows, mapped = model.harmony_distributions(harmony.symbols)
    hindex = {s: i for i, s in enumerate(model.harmony_model.alphabet)}
    hit = rows[np.arange(n), [hindex[s] for s in mapped]]
    out[:, 2] = -np.log2(np.maximum(hit, P_FLOOR))
    out[:, 3] = entropy_rows(rows)
    out = np.maximum(out, 0.0)
    return FeatureMatrix(piece.id, EXPECTANCY_COLUMNS, out, "E")
