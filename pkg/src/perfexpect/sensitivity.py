"""Differential sensitivity maps: mean signed derivative of the output at a
centre step with respect to every input cell in a window around it."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, SizeError
from .features import FeatureMatrix
from .regressor import Regressor, input_jacobian


@dataclass
class SensitivityMap:
    feature_names: Tuple[str, ...]
    half_window: int
    values: np.ndarray  # (features, 2W + 1); column w is offset w - W
    n_centers: int = 0

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.half_window, self.half_window + 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["feature"] + [str(o) for o in self.offsets])
        for name, row in zip(self.feature_names, self.values):
            writer.writerow([name] + [repr(float(v)) for v in row])
        return buf.getvalue()


def sensitivity_map(model: Regressor, pieces: Sequence[FeatureMatrix], W: int = 8) -> SensitivityMap:
    """Average d y[tau] / d x[t, f] (normalized inputs) over every centre tau
    with a full window inside its piece. Pieces not longer than 2W+1 are skipped."""
    if W < 0:
        raise ConfigurationError("window half-width must be >= 0")
    width = 2 * W + 1
    total = np.zeros((model.input_dim, width))
    count = 0
    for fm in pieces:
        T = len(fm)
        if T <= width:
            continue
        J = input_jacobian(model, fm)  # (tau, t, f)
        for tau in range(W, T - W):
            total += J[tau, tau - W:tau + W + 1].T
            count += 1
    if count == 0:
        raise SizeError(f"no piece is longer than {width} onsets")
    names = tuple(pieces[0].columns) if pieces and hasattr(pieces[0], "columns") else tuple(
        model.columns)
    return SensitivityMap(names or tuple(model.columns), W, total / count, count)


def average_maps(maps: Sequence[SensitivityMap]) -> SensitivityMap:
    """Unweighted mean of per-fold maps."""
    if not maps:
        raise SizeError("no maps to average")
    first = maps[0]
    for m in maps[1:]:
        if m.feature_names != first.feature_names or m.half_window != first.half_window:
            raise ConfigurationError("maps differ in features or window")
    return SensitivityMap(first.feature_names, first.half_window,
                          np.mean([m.values for m in maps], axis=0),
                          sum(m.n_centers for m in maps))
