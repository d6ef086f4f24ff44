"""One-way ANOVA and Tukey's HSD (Tukey-Kramer for unequal group sizes)."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .errors import ConfigurationError, UndefinedTestError


@dataclass
class TukeyRow:
    group_a: str
    group_b: str
    mean_difference: float  # mean(b) - mean(a)
    q: float
    q_critical: float
    p_value: float
    significant: bool

    def to_dict(self):
        return {"pair": [self.group_a, self.group_b], "mean_difference": self.mean_difference,
                "q": self.q, "q_critical": self.q_critical, "p_value": self.p_value,
                "significant": self.significant}


@dataclass
class StatTestResult:
    F: float
    df_between: int
    df_within: int
    p_value: float
    ms_within: float
    tukey: List[TukeyRow] = field(default_factory=list)

    def to_dict(self):
        return {"F": self.F, "df_between": self.df_between, "df_within": self.df_within,
                "p_value": self.p_value, "tukey": [r.to_dict() for r in self.tukey]}


def _check_groups(groups):
    arrays = [np.asarray(g, dtype=float) for g in groups]
    if len(arrays) < 2:
        raise ConfigurationError("need at least 2 groups")
    if any(a.size < 2 for a in arrays):
        raise ConfigurationError("every group needs at least 2 values")
    return arrays


def anova_oneway(groups: Sequence[Sequence[float]]) -> StatTestResult:
    arrays = _check_groups(groups)
    k = len(arrays)
    n = sum(a.size for a in arrays)
    grand = np.concatenate(arrays).mean()
    ss_between = float(sum(a.size * (a.mean() - grand) ** 2 for a in arrays))
    ss_within = float(sum(((a - a.mean()) ** 2).sum() for a in arrays))
    df_b, df_w = k - 1, n - k
    scale = max(1.0, float(np.abs(np.concatenate(arrays)).max()))
    if ss_within <= 1e-24 * scale ** 2:
        if ss_between <= 1e-24 * scale ** 2:
            raise UndefinedTestError("no variance within or between groups")
        return StatTestResult(math.inf, df_b, df_w, 0.0, 0.0)
    ms_w = ss_within / df_w
    F = (ss_between / df_b) / ms_w
    return StatTestResult(F, df_b, df_w, float(sps.f.sf(F, df_b, df_w)), ms_w)


def q_critical(alpha: float, k: int, df: int) -> float:
    """Upper-alpha point of the studentized range for k means and df error dof."""
    return float(sps.studentized_range.ppf(1.0 - alpha, k, df))


def tukey_hsd(groups: Sequence[Sequence[float]], alpha: float = 0.05,
              names: Optional[Sequence[str]] = None) -> List[TukeyRow]:
    if not 0 < alpha < 1:
        raise ConfigurationError("alpha must be in (0, 1)")
    arrays = _check_groups(groups)
    names = list(names) if names is not None else [str(i) for i in range(len(arrays))]
    k = len(arrays)
    df_w = sum(a.size for a in arrays) - k
    ms_w = sum(((a - a.mean()) ** 2).sum() for a in arrays) / df_w
    qcrit = q_critical(alpha, k, df_w)
    rows = []
    for i, j in itertools.combinations(range(k), 2):
        diff = float(arrays[j].mean() - arrays[i].mean())
        se = math.sqrt(ms_w / 2.0 * (1.0 / arrays[i].size + 1.0 / arrays[j].size))
        if se == 0:
            q = 0.0 if diff == 0 else math.inf
        else:
            q = abs(diff) / se
        p = float(sps.studentized_range.sf(q, k, df_w)) if math.isfinite(q) else 0.0
        rows.append(TukeyRow(names[i], names[j], diff, q, qcrit, min(max(p, 0.0), 1.0),
                             bool(q > qcrit)))
    return rows


def compare_groups(groups, names, alpha: float = 0.05) -> StatTestResult:
    result = anova_oneway(groups)
    result.tukey = tukey_hsd(groups, alpha, names)
    return result
