"""Slow, independent reference implementations used only by the tests."""
from fractions import Fraction
from itertools import product


def brute_counts(training, context):
    """How often each symbol follows ``context`` anywhere in ``training``."""
    k = len(context)
    counts = {}
    for seq in training:
        for i in range(k, len(seq)):
            if tuple(seq[i - k:i]) == tuple(context):
                counts[seq[i]] = counts.get(seq[i], 0) + 1
    return counts


def brute_ppm(training, alphabet, context, max_order):
    """PPM-C with exclusion in exact rational arithmetic, by rescanning the data."""
    context = tuple(context)
    top = min(len(context), max_order)
    probs = {s: Fraction(0) for s in alphabet}
    left = Fraction(1)
    done = set()
    for order in range(top, -1, -1):
        ctx = context[len(context) - order:]
        seen = brute_counts(training, ctx)
        if not seen:
            continue
        fresh = {s: c for s, c in seen.items() if s not in done}
        if not fresh:
            continue
        n, d = sum(fresh.values()), len(fresh)
        for s, c in fresh.items():
            probs[s] += left * Fraction(c, n + d)
            done.add(s)
        left *= Fraction(d, n + d)
    rest = [s for s in alphabet if s not in done]
    for s in rest:
        probs[s] += left / len(rest)
    # escape mass is lost when every symbol was already predicted
    total = sum(probs.values())
    return {s: p / total for s, p in probs.items()}


def all_sequences(alphabet, max_len):
    for n in range(1, max_len + 1):
        yield from product(alphabet, repeat=n)


def anova_by_hand(groups):
    """Textbook sums of squares in exact arithmetic."""
    groups = [[Fraction(x) for x in g] for g in groups]
    values = [x for g in groups for x in g]
    grand = sum(values) / len(values)
    ssb = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ssw = sum((x - sum(g) / len(g)) ** 2 for g in groups for x in g)
    dfb, dfw = len(groups) - 1, len(values) - len(groups)
    return (ssb / dfb) / (ssw / dfw), dfb, dfw
