"""Test-set evaluation and curve correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .. import bpe as bpe_mod
from ..analyses import new_vocab_prediction_rate
from ..metrics import spearman_rho
from .data import EncodedExample, SubtokenVocab
from .decoding import beam_search
from .training import TrainingCurve, teacher_forced_metrics
from .transformer import RepairTransformer


@dataclass
class EvalReport:
    variant: str
    n_pairs: int
    token_acc: float
    full_seq_acc: float
    topk_acc: dict[int, float] = field(default_factory=dict)
    new_vocab_rate: dict[int, float] = field(default_factory=dict)


def evaluate(
    model: RepairTransformer,
    vocab: SubtokenVocab,
    bpe_model: bpe_mod.BpeModel,
    examples: list[EncodedExample],
    k_list: tuple[int, ...] = (1, 5, 25),
    pointer_beam: int | None = None,
) -> EvalReport:
    """Top-k accuracy from one ranked beam list per example.

    ``full_seq_acc`` is the top-1 accuracy of the materialized patch against
    the gold token texts. For edit variants the beam is initialized with
    ``pointer_beam`` pointer combinations (defaults to max(k_list)).
    """
    if not examples:
        raise ValueError("empty test split")
    k_list = tuple(sorted(k_list))
    k_max = k_list[-1]
    if pointer_beam is None:
        pointer_beam = k_max if model.config.uses_edit else 1

    token_acc, _ = teacher_forced_metrics(model, examples, vocab)

    per_example_preds: list[list[tuple[str, ...]]] = []
    for ex in examples:
        hyps = beam_search(
            model, vocab, ex, bpe_model.end_marker, k=k_max, pointer_beam=pointer_beam
        )
        per_example_preds.append([h.patch_texts for h in hyps])

    gold = [(tuple(_bug_texts(ex, bpe_model)), tuple(ex.gold_patch_texts)) for ex in examples]

    topk_acc: dict[int, float] = {}
    vocab_rate: dict[int, float] = {}
    for k in k_list:
        hits = sum(
            1
            for preds, (_, gold_patch) in zip(per_example_preds, gold)
            if gold_patch in preds[:k]
        )
        topk_acc[k] = hits / len(examples)
        vocab_rate[k] = new_vocab_prediction_rate(
            [[list(p) for p in preds[:k]] for preds in per_example_preds],
            [(list(b), list(p)) for b, p in gold],
        )

    full_hits = sum(
        1
        for preds, (_, gold_patch) in zip(per_example_preds, gold)
        if preds and preds[0] == gold_patch
    )

    return EvalReport(
        variant=model.config.variant,
        n_pairs=len(examples),
        token_acc=token_acc,
        full_seq_acc=full_hits / len(examples),
        topk_acc=topk_acc,
        new_vocab_rate=vocab_rate,
    )


def _bug_texts(example: EncodedExample, bpe_model: bpe_mod.BpeModel) -> list[str]:
    return bpe_mod.split_stream(bpe_model, example.bug_subs)


def correlate_curve(curve: TrainingCurve) -> dict[str, float]:
    """Spearman correlation between teacher-forced token accuracy and
    full-sequence accuracy, overall and restricted to epochs > 10.

    NaN when a series is constant or too short for a rank correlation.
    """
    if len(curve.records) < 2:
        raise ValueError("need at least two epochs")

    def rho(records) -> float:
        if len(records) < 2:
            return math.nan
        x = [r.teacher_forced_token_acc for r in records]
        y = [r.full_sequence_acc for r in records]
        try:
            return spearman_rho(x, y)
        except ValueError:
            return math.nan

    return {
        "rho_all": rho(curve.records),
        "rho_after_epoch_10": rho([r for r in curve.records if r.epoch > 10]),
    }
