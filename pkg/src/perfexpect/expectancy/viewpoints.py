"""Melodic viewpoints and the mapping of derived predictions back onto pitches."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError
from .symbols import UNDEF


def _cpitch(prev, cur):
    return cur


def _cpint(prev, cur):
    return UNDEF if prev is None else cur - prev


def _contour(prev, cur):
    if prev is None:
        return UNDEF
    return (cur > prev) - (cur < prev)


@dataclass(frozen=True)
class Viewpoint:
    name: str
    step: Callable = None  # (previous pitch or None, current pitch) -> derived symbol

    def derive(self, pitches: Sequence[int]) -> list:
        out = []
        prev = None
        for p in pitches:
            out.append(self.step(prev, p))
            prev = p
        return out

    def alphabet(self, basic: Sequence[int]) -> Tuple:
        """Every derived value reachable inside the basic pitch alphabet."""
        if self.name == "cpitch":
            return tuple(basic)
        if self.name == "cpint":
            span = max(basic) - min(basic)
            return (UNDEF,) + tuple(range(-span, span + 1))
        return (UNDEF, -1, 0, 1)

    def __repr__(self):
        return f"Viewpoint({self.name!r})"


VIEWPOINTS: Dict[str, Viewpoint] = {
    "cpitch": Viewpoint("cpitch", _cpitch),
    "cpint": Viewpoint("cpint", _cpint),
    "contour": Viewpoint("contour", _contour),
}


def get_viewpoint(name) -> Viewpoint:
    if isinstance(name, Viewpoint):
        return name
    try:
        return VIEWPOINTS[name]
    except KeyError:
        raise ConfigurationError(f"unknown viewpoint {name!r}") from None


def derive_viewpoint(seq: Sequence[int], vp) -> list:
    return get_viewpoint(vp).derive(seq)


def to_basic(vp: Viewpoint, derived_probs: np.ndarray, derived_index: dict,
             prev, basic: Sequence[int]) -> np.ndarray:
    """Spread each derived symbol's mass uniformly over its pitch preimage."""
    targets = [vp.step(prev, b) for b in basic]
    sizes: Dict = {}
    for t in targets:
        sizes[t] = sizes.get(t, 0) + 1
    out = np.array([derived_probs[derived_index[t]] / sizes[t] if t in derived_index else 0.0
                    for t in targets])
    total = out.sum()
    if total <= 0:
        return np.full(len(basic), 1.0 / len(basic))
    return out / total
