"""
Cross-validation over pieces, per-piece R^2 / Pearson r, and the
ANOVA/Tukey comparison of the E, S and E+S feature sets.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .corpus import Piece, group_by_onset
from .errors import (ConfigurationError, EmptyMelodyError, PerfExpectError, SizeError,
                     UndefinedMetricError)
from .expectancy import ExpectancyConfig, ExpectancyModel, encode_melody
from .features import FEATURE_SETS, FeatureMatrix, columns_for, hstack, uses_expectancy
from .regressor import Regressor, TrainingConfig, init_regressor, predict, train
from .score_features import assemble_score_matrix
from .stats import StatTestResult, compare_groups
from .targets import TARGET_KINDS, TargetSeries, compute_target

log = logging.getLogger(__name__)


@dataclass
class FoldPlan:
    k: int
    assignments: Dict[str, int]
    seed: int = 0

    def test_ids(self, fold: int) -> List[str]:
        return [p for p, f in self.assignments.items() if f == fold]

    def train_ids(self, fold: int) -> List[str]:
        return [p for p, f in self.assignments.items() if f != fold]


def make_folds(piece_ids: Sequence[str], k: int = 5, seed: int = 0) -> FoldPlan:
    """Seeded shuffle, then round-robin assignment to ``k`` folds."""
    if k < 2:
        raise ConfigurationError("need k >= 2 folds")
    if k > len(piece_ids):
        raise ConfigurationError(f"{k} folds but only {len(piece_ids)} pieces")
    if len(set(piece_ids)) != len(piece_ids):
        raise ConfigurationError("piece ids must be unique")
    order = np.random.default_rng(seed).permutation(len(piece_ids))
    assignments = {piece_ids[i]: j % k for j, i in enumerate(order)}
    return FoldPlan(k, {p: assignments[p] for p in piece_ids}, seed)


def r_squared(pred, target) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape or target.size < 2:
        raise SizeError("need two equal-length series of length >= 2")
    ss_tot = float(((target - target.mean()) ** 2).sum())
    if ss_tot <= 0:
        raise UndefinedMetricError("R^2 is undefined for a constant target")
    return 1.0 - float(((target - pred) ** 2).sum()) / ss_tot


def pearson_r(pred, target) -> float:
    x = np.asarray(pred, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise SizeError("need two equal-length series of length >= 2")
    x = x - x.mean()
    y = y - y.mean()
    sxx = float(x @ x)
    syy = float(y @ y)
    if sxx <= 0 or syy <= 0:
        raise UndefinedMetricError("Pearson r is undefined for a constant series")
    return float(np.clip((x @ y) / math.sqrt(sxx * syy), -1.0, 1.0))


@dataclass
class PieceResult:
    piece_id: str
    fold: int
    r2: Optional[float]
    r: Optional[float]
    n_onsets: int

    def to_dict(self):
        return {"piece_id": self.piece_id, "fold": self.fold, "r2": self.r2, "r": self.r,
                "n_onsets": self.n_onsets}


@dataclass
class FoldModel:
    fold: int
    regressor: Regressor
    expectancy: Optional[ExpectancyModel]
    train_ids: List[str]
    test_ids: List[str]

    def to_dict(self) -> dict:
        return {"format": "perfexpect-model", "version": 1, "fold": self.fold,
                "train_ids": self.train_ids, "test_ids": self.test_ids,
                "regressor": self.regressor.to_dict(),
                "expectancy": self.expectancy.to_dict() if self.expectancy else None}

    @classmethod
    def from_dict(cls, obj: dict) -> "FoldModel":
        from .errors import ModelError
        if obj.get("format") != "perfexpect-model":
            raise ModelError("not a perfexpect model file")
        exp = obj.get("expectancy")
        return cls(obj.get("fold", -1), Regressor.from_dict(obj["regressor"]),
                   ExpectancyModel.from_dict(exp) if exp else None,
                   list(obj.get("train_ids", [])), list(obj.get("test_ids", [])))


@dataclass
class EvaluationReport:
    feature_set: str
    target: str
    rows: List[PieceResult]
    folds: List[dict] = field(default_factory=list)
    models: List[FoldModel] = field(default_factory=list)
    pooled: Optional[dict] = None

    def _valid(self, attr):
        return [getattr(r, attr) for r in self.rows if getattr(r, attr) is not None]

    @property
    def mean_r2(self) -> float:
        vals = self._valid("r2")
        return float(np.mean(vals)) if vals else math.nan

    @property
    def mean_r(self) -> float:
        vals = self._valid("r")
        return float(np.mean(vals)) if vals else math.nan

    @property
    def r2_values(self) -> List[float]:
        return self._valid("r2")

    def to_dict(self) -> dict:
        out = {"feature_set": self.feature_set, "target": self.target,
               "mean_r2": self.mean_r2, "mean_r": self.mean_r,
               "n_pieces": len(self.rows), "n_scored": len(self._valid("r2")),
               "pieces": [r.to_dict() for r in self.rows], "folds": self.folds}
        if self.pooled is not None:
            out["pooled"] = self.pooled
        return out


def feature_matrix(piece: Piece, feature_set: str,
                   expectancy: Optional[ExpectancyModel] = None) -> FeatureMatrix:
    columns_for(feature_set)
    parts = []
    if uses_expectancy(feature_set):
        if expectancy is None:
            raise ConfigurationError(f"feature set {feature_set} needs an expectancy model")
        parts.append(expectancy.features(piece))
    if feature_set != "E":
        parts.append(assemble_score_matrix(piece))
    return hstack(piece.id, feature_set, *parts)


def melody_pitch_range(pieces: Sequence[Piece]) -> List[int]:
    """Every melody pitch in the scores; used only to size the pitch alphabet."""
    out = set()
    for p in pieces:
        try:
            out.update(encode_melody(p).symbols)
        except EmptyMelodyError:
            pass
    return sorted(out)


def piece_target(piece: Piece, kind: str) -> TargetSeries:
    try:
        return compute_target(group_by_onset(piece), kind)
    except PerfExpectError as exc:
        raise type(exc)(f"target extraction failed for piece {piece.id}: {exc}") from exc


def fit_fold(train_pieces: Sequence[Piece], feature_set: str, target: str,
             training: TrainingConfig, expectancy_config: Optional[ExpectancyConfig] = None,
             hidden: int = 5, pitch_range: Sequence[int] = (), seed: int = 0):
    """Fit the expectancy model (if used) and the regressor on training pieces only."""
    exp = None
    if uses_expectancy(feature_set):
        exp = ExpectancyModel.fit(train_pieces, expectancy_config, pitch_range)
    data = [(feature_matrix(p, feature_set, exp), piece_target(p, target))
            for p in train_pieces]
    model = init_regressor(len(columns_for(feature_set)), hidden, seed)
    model.feature_set = feature_set
    model.target = target
    model, _ = train(model, data, training)
    return model, exp


def _metric(fn, pred, y, pid, name):
    try:
        return fn(pred, y)
    except UndefinedMetricError:
        log.warning("%s undefined for piece %s (constant series); excluded", name, pid)
        return None


def evaluate_cv(pieces: Sequence[Piece], feature_set: str, target: str, k: int = 5,
                seed: int = 0, training: Optional[TrainingConfig] = None,
                expectancy_config: Optional[ExpectancyConfig] = None, hidden: int = 5,
                pooled: bool = False) -> EvaluationReport:
    """k-fold cross-validation over pieces for one feature set and target."""
    if feature_set not in FEATURE_SETS:
        raise ConfigurationError(f"unknown feature set {feature_set!r}")
    if target not in TARGET_KINDS:
        raise ConfigurationError(f"unknown target {target!r}")
    training = training or TrainingConfig(seed=seed)
    by_id = {p.id: p for p in pieces}
    plan = make_folds([p.id for p in pieces], k, seed)
    pitch_range = melody_pitch_range(pieces)
    rows: List[PieceResult] = []
    folds, models = [], []
    all_pred, all_true = [], []
    for fold in range(k):
        train_ids, test_ids = plan.train_ids(fold), plan.test_ids(fold)
        model, exp = fit_fold([by_id[i] for i in train_ids], feature_set, target, training,
                              expectancy_config, hidden, pitch_range, seed + fold)
        for pid in test_ids:
            piece = by_id[pid]
            y = piece_target(piece, target).values
            pred = predict(model, feature_matrix(piece, feature_set, exp))
            all_pred.append(pred)
            all_true.append(y)
            rows.append(PieceResult(pid, fold, _metric(r_squared, pred, y, pid, "R^2"),
                                    _metric(pearson_r, pred, y, pid, "r"), len(y)))
        history = model.history
        folds.append({
            "fold": fold, "train_ids": train_ids, "test_ids": test_ids,
            "epochs": len(history),
            "best_val_loss": min((h["val_loss"] for h in history if "val_loss" in h),
                                 default=None),
            "selected_viewpoints": exp.system.names if exp else None,
        })
        models.append(FoldModel(fold, model, exp, train_ids, test_ids))
    order = {p.id: i for i, p in enumerate(pieces)}
    rows.sort(key=lambda r: order[r.piece_id])
    report = EvaluationReport(feature_set, target, rows, folds, models)
    if pooled:
        pred, y = np.concatenate(all_pred), np.concatenate(all_true)
        report.pooled = {"r2": _metric(r_squared, pred, y, "<pooled>", "R^2"),
                         "r": _metric(pearson_r, pred, y, "<pooled>", "r")}
    return report


def compare_feature_sets(reports: Dict[str, EvaluationReport], alpha: float = 0.05
                         ) -> StatTestResult:
    """ANOVA + Tukey on per-piece R^2 across feature sets for one target."""
    names = [fs for fs in FEATURE_SETS if fs in reports]
    return compare_groups([reports[fs].r2_values for fs in names], names, alpha)


def table1_rows(reports: Sequence[EvaluationReport]):
    """CSV rows shaped like the results table: one row per feature set,
    an (R^2, r) column pair per target; blanks where not evaluated."""
    header = ["feature_set"] + [f"{t}_{m}" for t in TARGET_KINDS for m in ("r2", "r")]
    cells = {(r.feature_set, r.target): r for r in reports}
    out = [header]
    for fs in FEATURE_SETS:
        if not any(key[0] == fs for key in cells):
            continue
        row = [fs]
        for t in TARGET_KINDS:
            rep = cells.get((fs, t))
            row += [f"{rep.mean_r2:.6f}", f"{rep.mean_r:.6f}"] if rep else ["", ""]
        out.append(row)
    return out
