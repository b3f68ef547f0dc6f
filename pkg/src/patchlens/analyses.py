"""Corpus-level studies: vocabulary novelty, bug/patch similarity, ambiguity
of similar bugs, and syntactic invariance.

Every operation is a pure function over pair lists and returns a small
result object; CSV/JSON emission lives in the CLI so these stay reusable.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from . import bpe as bpe_mod
from . import lexer, metrics
from .corpus import BugFixPair, ContextMode, extract_context

RETRIEVAL_NEIGHBORS = 3
DEFAULT_HEATMAP_BINS = 20
BREAKDOWN_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 1.0)


def _bug_texts(pair: BugFixPair) -> list[str]:
    return [t.text for t in pair.bug_tokens()]


def _patch_texts(pair: BugFixPair) -> list[str]:
    return [t.text for t in pair.patch_tokens()]


# ---------------------------------------------------------------------------
# New vocabulary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VocabReport:
    context_mode: str
    with_bpe: bool
    ratio_new_vocab: float
    sample_count: int


def _seen_pool(pair: BugFixPair, mode: ContextMode) -> set[str]:
    pool = set(_bug_texts(pair))
    if mode.kind != "none":
        ctx = extract_context(pair, mode)
        pool.update(t.text for t in ctx.tokens_before)
        pool.update(t.text for t in ctx.tokens_after)
    return pool


def pair_has_new_vocab(
    pair: BugFixPair,
    mode: ContextMode,
    bpe_model: bpe_mod.BpeModel | None = None,
) -> bool:
    """Does the patch contain a (sub)token absent from bug plus context?"""
    pool = _seen_pool(pair, mode)
    patch = _patch_texts(pair)
    if bpe_model is None:
        return any(t not in pool for t in patch)
    seen_subs: set[str] = set()
    for token in pool:
        seen_subs.update(bpe_mod.encode(bpe_model, token))
    for token in patch:
        if any(sub not in seen_subs for sub in bpe_mod.encode(bpe_model, token)):
            return True
    return False


def new_vocab_ratio(
    pairs: Sequence[BugFixPair],
    mode: ContextMode,
    bpe_model: bpe_mod.BpeModel | None = None,
) -> VocabReport:
    if not pairs:
        raise ValueError("empty split")
    hits = sum(1 for p in pairs if pair_has_new_vocab(p, mode, bpe_model))
    return VocabReport(
        context_mode=str(mode),
        with_bpe=bpe_model is not None,
        ratio_new_vocab=hits / len(pairs),
        sample_count=len(pairs),
    )


# ---------------------------------------------------------------------------
# Bug/patch similarity distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricDistribution:
    metric: str
    values: tuple[float, ...]
    mean: float
    median: float
    histogram: tuple[tuple[float, float, int], ...]  # (lo, hi, count)

    def ratio_at(self, predicate) -> float:
        return sum(1 for v in self.values if predicate(v)) / len(self.values)


def _histogram(values: Sequence[float], lo: float, hi: float, bins: int):
    counts = [0] * bins
    width = (hi - lo) / bins
    for v in values:
        idx = min(int((v - lo) / width), bins - 1) if width else 0
        counts[max(idx, 0)] += 1
    return tuple((lo + i * width, lo + (i + 1) * width, c) for i, c in enumerate(counts))


@dataclass(frozen=True)
class SimilarityReport:
    edit_distance: MetricDistribution
    jaccard: MetricDistribution
    bleu: MetricDistribution


def similarity_report(pairs: Sequence[BugFixPair], unit_bins: int = 20) -> SimilarityReport:
    """Distributions of the three bug/patch similarity metrics.

    BLEU is oriented with the patch as reference and the bug as hypothesis:
    it asks how far the bug already overlaps what the fix has to produce.
    """
    if not pairs:
        raise ValueError("empty split")
    eds: list[float] = []
    jacs: list[float] = []
    bleus: list[float] = []
    for pair in pairs:
        bug = _bug_texts(pair)
        patch = _patch_texts(pair)
        eds.append(float(metrics.edit_distance(bug, patch)))
        jacs.append(metrics.jaccard(bug, patch))
        bleus.append(metrics.bleu(reference=patch, hypothesis=bug))

    def dist(name: str, values: list[float], lo: float, hi: float, bins: int):
        stats = metrics.distribution_stats(values)
        return MetricDistribution(
            metric=name,
            values=tuple(values),
            mean=stats.mean,
            median=stats.median,
            histogram=_histogram(values, lo, hi, bins),
        )

    ed_hi = max(max(eds), 1.0)
    return SimilarityReport(
        edit_distance=dist("edit_distance", eds, 0.0, ed_hi + 1.0, int(ed_hi) + 1),
        jaccard=dist("jaccard", jacs, 0.0, 1.0, unit_bins),
        bleu=dist("bleu", bleus, 0.0, 1.0, unit_bins),
    )


# ---------------------------------------------------------------------------
# Similar-bug retrieval and the ambiguity study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NeighborRecord:
    query_id: str
    neighbor_ids: tuple[str, ...]
    bug_sims: tuple[float, ...]
    patch_sims: tuple[float, ...]
    truncated: bool = False


def _ngram_profile(texts: Sequence[str]):
    return [metrics.ngram_set(texts, n) for n in range(1, metrics.MAX_NGRAM + 1)]


def _jaccard_profiles(pa, pb) -> float:
    total = 0.0
    for sa, sb in zip(pa, pb):
        union = len(sa | sb)
        if union:
            total += len(sa & sb) / union
    return total / metrics.MAX_NGRAM


def nearest_bugs(
    query_bug: Sequence[str],
    train_pairs: Sequence[BugFixPair],
    k: int,
    query_patch: Sequence[str] | None = None,
) -> NeighborRecord:
    """The k most similar training bugs by mean 1..4-gram Jaccard, exhaustive.

    Ties keep corpus order. Asking for more neighbors than the train split
    holds returns them all with ``truncated`` set.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query_profile = _ngram_profile(query_bug)
    sims = [
        _jaccard_profiles(query_profile, _ngram_profile(_bug_texts(p)))
        for p in train_pairs
    ]
    order = sorted(range(len(train_pairs)), key=lambda i: (-sims[i], i))[:k]
    patch_sims: list[float] = []
    if query_patch is not None:
        for i in order:
            patch_sims.append(metrics.jaccard(query_patch, _patch_texts(train_pairs[i])))
    return NeighborRecord(
        query_id="query",
        neighbor_ids=tuple(train_pairs[i].pair_id for i in order),
        bug_sims=tuple(sims[i] for i in order),
        patch_sims=tuple(patch_sims),
        truncated=len(order) < k,
    )


@dataclass(frozen=True)
class AmbiguityObservation:
    query_id: str
    neighbor_id: str
    bug_sim: float
    patch_sim: float


def _pair_payload(pair: BugFixPair) -> tuple[str, list[str], list[str]]:
    return pair.pair_id, _bug_texts(pair), _patch_texts(pair)


def _score_queries(args) -> list[tuple[str, str, float, float]]:
    queries, train, metric, k = args
    train_profiles = [_ngram_profile(bug) for _, bug, _ in train]
    out = []
    for query_id, bug, patch in queries:
        qp = _ngram_profile(bug)
        sims = [_jaccard_profiles(qp, tp) for tp in train_profiles]
        order = sorted(range(len(train)), key=lambda i: (-sims[i], i))[:k]
        for i in order:
            nid, nbug, npatch = train[i]
            if metric == "jaccard":
                bug_sim = sims[i]
                patch_sim = metrics.jaccard(patch, npatch)
            else:
                bug_sim = metrics.bleu(reference=bug, hypothesis=nbug)
                patch_sim = metrics.bleu(reference=patch, hypothesis=npatch)
            out.append((query_id, nid, bug_sim, patch_sim))
    return out


def ambiguity_observations(
    test_pairs: Sequence[BugFixPair],
    train_pairs: Sequence[BugFixPair],
    metric: str = "jaccard",
    k: int = RETRIEVAL_NEIGHBORS,
    jobs: int = 1,
) -> list[AmbiguityObservation]:
    """One observation per (held-out pair, top-k training neighbor).

    Retrieval always uses bug-token Jaccard; the recorded similarities use
    ``metric``. BLEU similarities put the held-out item as reference and the
    training neighbor as hypothesis, matching the train-to-held-out transfer
    direction.
    """
    if metric not in ("jaccard", "bleu"):
        raise ValueError(f"unknown metric: {metric!r}")
    if not test_pairs or not train_pairs:
        raise ValueError("both splits must be nonempty")
    train = [_pair_payload(p) for p in train_pairs]
    queries = [_pair_payload(p) for p in test_pairs]

    if jobs > 1 and len(queries) > 1:
        chunk = math.ceil(len(queries) / jobs)
        tasks = [
            (queries[i : i + chunk], train, metric, k)
            for i in range(0, len(queries), chunk)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_score_queries, tasks))
        raw = [row for part in chunks for row in part]
    else:
        raw = _score_queries((queries, train, metric, k))

    return [AmbiguityObservation(*row) for row in raw]


@dataclass(frozen=True)
class HeatmapGrid:
    metric: str
    bins: tuple[tuple[int, ...], ...]
    normalized: tuple[tuple[float, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.bins)


def ambiguity_heatmap(
    observations: Sequence[AmbiguityObservation],
    metric: str,
    bins: int = DEFAULT_HEATMAP_BINS,
) -> HeatmapGrid:
    """2-D histogram of (bug similarity, patch similarity) observations.

    Cell [i][j] counts observations with bug similarity in bin i and patch
    similarity in bin j; normalization is ln(1+count)/ln(1+max count), so
    the densest cell maps to 1.
    """
    counts = [[0] * bins for _ in range(bins)]
    for obs in observations:
        bi = min(int(obs.bug_sim * bins), bins - 1)
        pj = min(int(obs.patch_sim * bins), bins - 1)
        counts[bi][pj] += 1
    max_count = max((c for row in counts for c in row), default=0)
    if max_count:
        norm = tuple(
            tuple(math.log1p(c) / math.log1p(max_count) for c in row) for row in counts
        )
    else:
        norm = tuple(tuple(0.0 for _ in row) for row in counts)
    return HeatmapGrid(metric=metric, bins=tuple(tuple(row) for row in counts), normalized=norm)


@dataclass(frozen=True)
class BreakdownRow:
    bug_threshold: float
    samples: int
    pct_below: float
    pct_at_or_above: float


def similar_pair_breakdown(
    observations: Sequence[AmbiguityObservation],
    bug_thresholds: Sequence[float] = BREAKDOWN_THRESHOLDS,
    patch_threshold: float = 0.5,
) -> list[BreakdownRow]:
    """For each bug-similarity floor, how often the patches stay similar."""
    rows: list[BreakdownRow] = []
    for threshold in bug_thresholds:
        selected = [o for o in observations if o.bug_sim >= threshold]
        n = len(selected)
        if n == 0:
            rows.append(BreakdownRow(threshold, 0, 0.0, 0.0))
            continue
        above = sum(1 for o in selected if o.patch_sim >= patch_threshold)
        rows.append(
            BreakdownRow(
                bug_threshold=threshold,
                samples=n,
                pct_below=100.0 * (n - above) / n,
                pct_at_or_above=100.0 * above / n,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Syntactic invariance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntaxInvarianceReport:
    all_pairs: int
    all_unchanged: int
    with_new_tokens: int
    with_new_unchanged: int
    without_new_tokens: int
    without_new_unchanged: int

    def ratios(self) -> dict[str, float]:
        def ratio(num: int, den: int) -> float:
            return num / den if den else 0.0

        return {
            "all": ratio(self.all_unchanged, self.all_pairs),
            "with_new_tokens": ratio(self.with_new_unchanged, self.with_new_tokens),
            "without_new_tokens": ratio(self.without_new_unchanged, self.without_new_tokens),
        }


def syntax_invariance_report(pairs: Sequence[BugFixPair]) -> SyntaxInvarianceReport:
    """How often the patch keeps the bug's token-kind sequence, stratified by
    whether the patch introduces tokens unseen in the bug line."""
    if not pairs:
        raise ValueError("empty split")
    none_mode = ContextMode.none()
    all_unchanged = 0
    new_total = new_unchanged = 0
    old_total = old_unchanged = 0
    for pair in pairs:
        bug_tokens = pair.bug_tokens()
        patch_tokens = pair.patch_tokens()
        unchanged = lexer.syntax_unchanged(bug_tokens, patch_tokens)
        has_new = pair_has_new_vocab(pair, none_mode, None)
        all_unchanged += unchanged
        if has_new:
            new_total += 1
            new_unchanged += unchanged
        else:
            old_total += 1
            old_unchanged += unchanged
    return SyntaxInvarianceReport(
        all_pairs=len(pairs),
        all_unchanged=all_unchanged,
        with_new_tokens=new_total,
        with_new_unchanged=new_unchanged,
        without_new_tokens=old_total,
        without_new_unchanged=old_unchanged,
    )


# ---------------------------------------------------------------------------
# New-vocabulary prediction rate
# ---------------------------------------------------------------------------


def new_vocab_prediction_rate(
    topk_predictions: Sequence[Sequence[Sequence[str]]],
    gold: Sequence[tuple[Sequence[str], Sequence[str]]],
) -> float:
    """Over pairs whose gold patch introduces tokens absent from the bug:
    the fraction where some top-k prediction contains every required new
    token. NaN when no pair qualifies.
    """
    if len(topk_predictions) != len(gold):
        raise ValueError("predictions and gold pairs must align")
    qualifying = 0
    hits = 0
    for preds, (bug, patch) in zip(topk_predictions, gold):
        required = set(patch) - set(bug)
        if not required:
            continue
        qualifying += 1
        if any(required <= set(p) for p in preds):
            hits += 1
    if qualifying == 0:
        return math.nan
    return hits / qualifying
