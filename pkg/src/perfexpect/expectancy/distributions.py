"""Predictive distributions, information content, entropy and the
entropy-weighted geometric combination of several predictions."""
from __future__ import annotations

import math
from typing import Hashable, Sequence, Tuple

import numpy as np

from ..errors import CombinationError, DomainError

P_FLOOR = 1e-12


class Distribution:
    """Probabilities over an ordered alphabet.

    Behaves like a read-only mapping ``symbol -> probability``.
    """

    __slots__ = ("symbols", "p", "_index")

    def __init__(self, symbols: Sequence[Hashable], p, index=None):
        self.symbols = tuple(symbols)
        self.p = np.asarray(p, dtype=float)
        if self.p.shape != (len(self.symbols),):
            raise ValueError("probability vector does not match alphabet")
        self._index = index if index is not None else {s: i for i, s in enumerate(self.symbols)}

    def __getitem__(self, symbol) -> float:
        return float(self.p[self._index[symbol]])

    def __contains__(self, symbol):
        return symbol in self._index

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def items(self):
        return zip(self.symbols, self.p.tolist())

    def as_dict(self) -> dict:
        return dict(self.items())

    def index(self, symbol) -> int:
        return self._index[symbol]

    def __repr__(self):
        body = ", ".join(f"{s!r}: {p:.4g}" for s, p in self.items())
        return f"Distribution({{{body}}})"


def ic(dist: Distribution, observed) -> float:
    """Information content of ``observed`` in bits."""
    if observed not in dist:
        raise DomainError(f"symbol {observed!r} is not in the alphabet")
    return -math.log2(max(dist[observed], P_FLOOR))


def entropy(dist: Distribution) -> float:
    return entropy_of(dist.p)


def entropy_of(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


def entropy_rows(p: np.ndarray) -> np.ndarray:
    safe = np.where(p > 0, p, 1.0)
    return -(p * np.log2(safe)).sum(axis=-1)


def entropy_weights(p: np.ndarray, bias: float) -> np.ndarray:
    """Weights (H / H_max) ** -bias along the last axis; low entropy counts more."""
    n = p.shape[-1]
    if n < 2:
        return np.ones(p.shape[:-1])
    relative = entropy_rows(p) / math.log2(n)
    return np.maximum(relative, 1e-6) ** (-bias)


def combine_rows(stack: np.ndarray, bias: float) -> np.ndarray:
    """Combine predictions ``stack[k, ..., symbol]`` over the first axis."""
    stack = np.asarray(stack, dtype=float)
    if stack.shape[0] == 1:
        return stack[0].copy()
    w = entropy_weights(stack, bias)
    w = w / w.sum(axis=0, keepdims=True)
    logp = (w[..., None] * np.log(np.maximum(stack, 1e-300))).sum(axis=0)
    logp -= logp.max(axis=-1, keepdims=True)
    out = np.exp(logp)
    return out / out.sum(axis=-1, keepdims=True)


def combine_distributions(dists: Sequence[Distribution], bias: float = 1.0) -> Distribution:
    """Entropy-weighted geometric mean of distributions over one alphabet."""
    if not dists:
        raise CombinationError("nothing to combine")
    symbols = dists[0].symbols
    for d in dists[1:]:
        if d.symbols != symbols:
            raise CombinationError("distributions are over different alphabets")
    if len(dists) == 1:
        return dists[0]
    return Distribution(symbols, combine_rows(np.stack([d.p for d in dists]), bias),
                        dists[0]._index)


def kl_divergence(p: Distribution, q: Distribution) -> float:
    mask = p.p > 0
    return float((p.p[mask] * np.log2(p.p[mask] / q.p[mask])).sum())
