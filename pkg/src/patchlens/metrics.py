"""Sequence similarity and summary-statistic primitives.

All sequence arguments are generic: any list/tuple of hashable items works
(token texts, subtokens, characters). Similarity functions are pure.
"""

from __future__ import annotations

import math
import statistics
from collections import Counter
from collections.abc import Callable, Sequence
from dataclasses import dataclass

MAX_NGRAM = 4


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Token-level Levenshtein distance (insertions, deletions, substitutions)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, item_a in enumerate(a, 1):
        cur = [i]
        append = cur.append
        for j, item_b in enumerate(b, 1):
            append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (item_a != item_b)))
        prev = cur
    return prev[-1]


def ngram_set(seq: Sequence, n: int) -> set[tuple]:
    """Set of contiguous n-token windows; empty when the sequence is shorter than n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return {tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)}


def jaccard(a: Sequence, b: Sequence) -> float:
    """Mean 1..4-gram intersection-over-union; a term with an empty union is 0."""
    total = 0.0
    for n in range(1, MAX_NGRAM + 1):
        sa = ngram_set(a, n)
        sb = ngram_set(b, n)
        union = len(sa | sb)
        if union:
            total += len(sa & sb) / union
    return total / MAX_NGRAM


def _ngram_counts(seq: Sequence, n: int) -> Counter:
    return Counter(tuple(seq[i : i + n]) for i in range(len(seq) - n + 1))


def bleu(
    reference: Sequence,
    hypothesis: Sequence,
    mean: str = "arithmetic",
    smoothing: bool = False,
) -> float:
    """Sentence BLEU of ``hypothesis`` against a single ``reference``.

    Modified 1..4-gram precisions (clipped counts over hypothesis counts),
    combined with the given mean and scaled by the brevity penalty
    ``min(1, exp(1 - |ref|/|hyp|))``. A precision is 0 when the hypothesis
    has no n-grams of that order; with the geometric mean any zero precision
    zeroes the score unless ``smoothing`` is set, which applies add-one
    smoothing to every precision. Asymmetric in its arguments by design.
    """
    if mean not in ("arithmetic", "geometric"):
        raise ValueError(f"unknown mean variant: {mean!r}")
    if not hypothesis:
        return 0.0

    precisions = []
    for n in range(1, MAX_NGRAM + 1):
        hyp_counts = _ngram_counts(hypothesis, n)
        total = sum(hyp_counts.values())
        if total == 0:
            clipped = 0
        else:
            ref_counts = _ngram_counts(reference, n)
            clipped = sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        if smoothing:
            precisions.append((clipped + 1) / (total + 1))
        else:
            precisions.append(clipped / total if total else 0.0)

    bp = min(1.0, math.exp(1.0 - len(reference) / len(hypothesis)))
    if mean == "arithmetic":
        return bp * sum(precisions) / MAX_NGRAM
    if any(p == 0.0 for p in precisions):
        return 0.0
    return bp * math.exp(sum(math.log(p) for p in precisions) / MAX_NGRAM)


def _average_ranks(values: Sequence[float]) -> list[float]:
    """Ranks starting at 1; tied values share the mean of their rank range."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson correlation of average ranks.

    Raises ValueError on length mismatch, fewer than two points, or a
    constant input (the correlation is undefined there).
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least two points")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    dx = [r - mx for r in rx]
    dy = [r - my for r in ry]
    sx = math.sqrt(sum(d * d for d in dx))
    sy = math.sqrt(sum(d * d for d in dy))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined for constant input")
    return sum(a * b for a, b in zip(dx, dy)) / (sx * sy)


@dataclass(frozen=True)
class DistributionStats:
    """Mean, lower median, and predicate ratios over a nonempty sample.

    The median is the lower median (sorted element at index (n-1)//2), which
    keeps it an observed value for integer-valued distributions such as edit
    distances.
    """

    values: tuple[float, ...]
    mean: float
    median: float

    def ratio_at(self, predicate: Callable[[float], bool]) -> float:
        return sum(1 for v in self.values if predicate(v)) / len(self.values)


def distribution_stats(values: Sequence[float]) -> DistributionStats:
    if not values:
        raise ValueError("empty sample")
    vals = tuple(values)
    return DistributionStats(
        values=vals,
        mean=sum(vals) / len(vals),
        median=float(statistics.median_low(vals)),
    )
