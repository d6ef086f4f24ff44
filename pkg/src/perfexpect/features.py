"""Per-onset feature matrices and the fixed column orders of the three feature sets."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import ConfigurationError, ShapeError

EXPECTANCY_COLUMNS = ("ic_m", "h_m", "ic_c", "h_c")
SCORE_COLUMNS = ("pitch_h", "pitch_l", "pitch_m", "vic_1", "vic_2", "vic_3",
                 "b_phi", "b_d", "b_s", "b_w")
BINARY_COLUMNS = frozenset(("b_d", "b_s", "b_w"))
FEATURE_SETS = ("E", "S", "E+S")


def columns_for(feature_set: str) -> Tuple[str, ...]:
    if feature_set == "E":
        return EXPECTANCY_COLUMNS
    if feature_set == "S":
        return SCORE_COLUMNS
    if feature_set == "E+S":
        return EXPECTANCY_COLUMNS + SCORE_COLUMNS
    raise ConfigurationError(f"unknown feature set {feature_set!r}")


def uses_expectancy(feature_set: str) -> bool:
    return "E" in feature_set.split("+")


@dataclass(frozen=True)
class FeatureMatrix:
    piece_id: str
    columns: Tuple[str, ...]
    rows: np.ndarray
    feature_set: str = ""

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.columns):
            raise ShapeError(f"{self.piece_id}: rows shape {rows.shape} does not match "
                             f"{len(self.columns)} columns")
        if not np.all(np.isfinite(rows)):
            raise ShapeError(f"{self.piece_id}: non-finite feature values")
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return self.rows.shape[0]


def hstack(piece_id: str, feature_set: str, *parts: FeatureMatrix) -> FeatureMatrix:
    columns = sum((p.columns for p in parts), ())
    return FeatureMatrix(piece_id, columns, np.hstack([p.rows for p in parts]), feature_set)


def to_csv_lines(fm: FeatureMatrix, with_index: bool = False):
    header = (["piece_id", "onset_index"] if with_index else []) + list(fm.columns)
    yield header
    for i, row in enumerate(fm.rows):
        prefix = [fm.piece_id, i] if with_index else []
        yield prefix + [repr(float(v)) for v in row]
