"""
Variable-order context model with PPM escape method C and exclusion.

Prediction walks from the longest usable context down to order 0. At each
order the not-yet-predicted symbols seen after the context share
``c / (n + d)`` of the remaining mass and ``d / (n + d)`` escapes further
down (``n`` = their total count, ``d`` = how many distinct ones). Contexts
never seen in training are skipped without escaping. Whatever mass is left
at the bottom is spread uniformly over the still-unpredicted alphabet.
"""
from __future__ import annotations

import json
from collections import defaultdict
from typing import Dict, Hashable, Iterable, Optional, Sequence, Tuple

import numpy as np

from ..errors import ModelError, TrainingError
from .distributions import Distribution
from .symbols import decode_symbol, encode_symbol, sort_symbols


class ContextModel:
    """n-gram counts for every context of length ``0..max_order``."""

    def __init__(self, max_order: int, alphabet: Iterable[Hashable] = ()):
        if max_order < 0:
            raise TrainingError("max_order must be >= 0")
        self.max_order = int(max_order)
        self.alphabet = sort_symbols(alphabet)
        self._index = {s: i for i, s in enumerate(self.alphabet)}
        self.counts: Dict[tuple, Dict[Hashable, int]] = defaultdict(dict)

    def _extend_alphabet(self, symbols):
        new = set(symbols) - set(self._index)
        if new:
            self.alphabet = sort_symbols(self.alphabet + tuple(new))
            self._index = {s: i for i, s in enumerate(self.alphabet)}

    def add_event(self, history: Sequence[Hashable], symbol: Hashable) -> None:
        """Count ``symbol`` after every suffix (up to max_order) of ``history``."""
        if symbol not in self._index:
            self._extend_alphabet([symbol])
        history = tuple(history)
        n = len(history)
        for order in range(0, min(n, self.max_order) + 1):
            table = self.counts[history[n - order:]]
            table[symbol] = table.get(symbol, 0) + 1

    def add_sequence(self, seq: Sequence[Hashable]) -> None:
        seq = tuple(seq)
        self._extend_alphabet(seq)
        for i, s in enumerate(seq):
            self.add_event(seq[max(0, i - self.max_order):i], s)

    def copy(self) -> "ContextModel":
        other = ContextModel(self.max_order, self.alphabet)
        for ctx, table in self.counts.items():
            other.counts[ctx] = dict(table)
        return other

    def predict(self, context: Sequence[Hashable]) -> Distribution:
        return Distribution(self.alphabet, self.predict_array(context), self._index)

    def predict_array(self, context: Sequence[Hashable]) -> np.ndarray:
        if not self.alphabet:
            raise ModelError("model has an empty alphabet")
        probs = np.zeros(len(self.alphabet))
        index = self._index
        excluded = set()
        mass = 1.0
        ctx = tuple(context)
        top = min(len(ctx), self.max_order)
        for order in range(top, -1, -1):
            table = self.counts.get(ctx[len(ctx) - order:] if order else ())
            if not table:
                continue
            avail = [(s, c) for s, c in table.items() if s not in excluded]
            if not avail:
                continue
            n = sum(c for _, c in avail)
            d = len(avail)
            denom = n + d
            for s, c in avail:
                probs[index[s]] += mass * c / denom
                excluded.add(s)
            mass *= d / denom
        rest = len(self.alphabet) - len(excluded)
        if rest:
            share = mass / rest
            for i, s in enumerate(self.alphabet):
                if s not in excluded:
                    probs[i] += share
        return probs / probs.sum()

    def to_dict(self) -> dict:
        tables = []
        for ctx in sorted(self.counts, key=lambda c: json.dumps([encode_symbol(s) for s in c])):
            table = self.counts[ctx]
            tables.append({
                "context": [encode_symbol(s) for s in ctx],
                "counts": [[encode_symbol(s), table[s]] for s in sort_symbols(table)],
            })
        return {"max_order": self.max_order,
                "alphabet": [encode_symbol(s) for s in self.alphabet],
                "tables": tables}

    @classmethod
    def from_dict(cls, obj: dict) -> "ContextModel":
        model = cls(obj["max_order"], [decode_symbol(s) for s in obj["alphabet"]])
        for entry in obj["tables"]:
            ctx = tuple(decode_symbol(s) for s in entry["context"])
            model.counts[ctx] = {decode_symbol(s): int(c) for s, c in entry["counts"]}
        return model

    def __eq__(self, other):
        if not isinstance(other, ContextModel):
            return NotImplemented
        return (self.max_order == other.max_order and self.alphabet == other.alphabet
                and {k: v for k, v in self.counts.items() if v}
                == {k: v for k, v in other.counts.items() if v})


def ppm_train(sequences: Sequence[Sequence[Hashable]], max_order: int = 3,
              alphabet: Optional[Iterable[Hashable]] = None) -> ContextModel:
    if not sequences:
        raise TrainingError("empty training set")
    model = ContextModel(max_order, alphabet or ())
    for seq in sequences:
        model.add_sequence(seq)
    return model


def ppm_predict(model: ContextModel, context: Sequence[Hashable]) -> Distribution:
    return model.predict(context)
