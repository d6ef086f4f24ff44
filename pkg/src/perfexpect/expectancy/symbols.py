"""Reserved symbols, deterministic alphabet ordering, JSON encoding of symbols."""
from __future__ import annotations

UNDEF = None       # derived viewpoint value where the derivation is undefined
UNSEEN = "UNSEEN"  # harmony symbol standing for any tuple absent from training


def symbol_key(s):
    if s is None:
        return (0, 0)
    if isinstance(s, bool):
        return (1, int(s))
    if isinstance(s, int):
        return (1, s)
    if isinstance(s, tuple):
        return (2, s)
    return (3, str(s))


def sort_symbols(symbols):
    return tuple(sorted(set(symbols), key=symbol_key))


def encode_symbol(s):
    return list(s) if isinstance(s, tuple) else s


def decode_symbol(s):
    return tuple(s) if isinstance(s, list) else s
