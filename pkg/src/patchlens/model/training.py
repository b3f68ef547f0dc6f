"""Training loop, teacher-forced metrics, and the per-epoch curve.

Curve semantics: teacher-forced token accuracy and mean gold-token
probability are macro-averaged (per sample first, then over samples). A
greedily correct sample has per-sample token accuracy 1, so the macro
average is always >= full-sequence accuracy, at every epoch.
"""

from __future__ import annotations

import copy
import csv
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .. import bpe as bpe_mod
from .config import ModelConfig
from .data import EncodedExample, SubtokenVocab
from .decoding import beam_search, greedy_decode
from .checkpoint import save_checkpoint
from .transformer import RepairTransformer


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainSettings:
    epochs: int = 100
    batch_size: int = 16
    lr: float = 1e-3
    warmup_steps: int = 50
    pointer_loss_weight: float = 1.0
    grad_clip: float | None = 1.0
    curve_beam_k: int = 5
    curve_pointer_beam: int = 5
    seed: int | None = None  # defaults to the model config seed
    target_full_seq_acc: float | None = None  # stop once valid accuracy reaches this


@dataclass
class Batch:
    src: torch.Tensor            # (B, S) long
    src_padding_mask: torch.Tensor  # (B, S) bool, True = pad
    dec_in: torch.Tensor         # (B, T) long, BOS-prefixed
    tgt_out: torch.Tensor        # (B, T) long, EOS-terminated, PAD elsewhere
    span_mask: torch.Tensor | None
    pointer_base: torch.Tensor | None
    bug_start: torch.Tensor | None
    n_gaps: torch.Tensor | None
    insert_ptrs: torch.Tensor | None
    delete_ptrs: torch.Tensor | None

    def __len__(self) -> int:
        return self.src.shape[0]


def collate(
    examples: list[EncodedExample], vocab: SubtokenVocab, config: ModelConfig,
    dtype: torch.dtype,
) -> Batch:
    bsz = len(examples)
    s_max = max(len(e.src_ids) for e in examples)
    t_max = max(len(e.tgt_ids) for e in examples) + 1  # room for EOS

    src = torch.full((bsz, s_max), vocab.pad_id, dtype=torch.long)
    src_pad = torch.ones(bsz, s_max, dtype=torch.bool)
    dec_in = torch.full((bsz, t_max), vocab.pad_id, dtype=torch.long)
    tgt_out = torch.full((bsz, t_max), vocab.pad_id, dtype=torch.long)
    span = torch.zeros(bsz, s_max, dtype=dtype) if config.uses_context else None

    for b, ex in enumerate(examples):
        src[b, : len(ex.src_ids)] = torch.tensor(ex.src_ids, dtype=torch.long)
        src_pad[b, : len(ex.src_ids)] = False
        dec_in[b, 0] = vocab.bos_id
        if ex.tgt_ids:
            dec_in[b, 1 : 1 + len(ex.tgt_ids)] = torch.tensor(ex.tgt_ids, dtype=torch.long)
            tgt_out[b, : len(ex.tgt_ids)] = torch.tensor(ex.tgt_ids, dtype=torch.long)
        tgt_out[b, len(ex.tgt_ids)] = vocab.eos_id
        if span is not None:
            start, end = ex.bug_span()
            span[b, start:end] = 1.0

    if config.uses_edit:
        pointer_base = torch.tensor([e.pointer_base for e in examples], dtype=torch.long)
        bug_start = torch.tensor([e.bug_start for e in examples], dtype=torch.long)
        n_gaps = torch.tensor([e.n_gaps for e in examples], dtype=torch.long)
        ins = torch.tensor([e.insert_ptr for e in examples], dtype=torch.long)
        dele = torch.tensor([e.delete_ptr for e in examples], dtype=torch.long)
    else:
        pointer_base = bug_start = n_gaps = ins = dele = None

    return Batch(src, src_pad, dec_in, tgt_out, span, pointer_base, bug_start, n_gaps, ins, dele)


@dataclass
class ForwardStats:
    loss: torch.Tensor
    token_acc: float                 # micro: fraction of gold positions hit
    sample_correct: list[int]        # per sample, positions predicted right
    sample_positions: list[int]
    sample_gold_prob: list[float]    # per sample, mean gold-token probability
    pointer_acc: float | None = None


def forward_train(model: RepairTransformer, batch: Batch) -> ForwardStats:
    """Teacher-forced loss: token cross-entropy plus, for edit variants, the
    two pointer cross-entropies at unit weight each."""
    config = model.config
    enc = model.encode(batch.src, batch.src_padding_mask)

    cross_bias = None
    if config.uses_context:
        cross_bias = model.cross_bias(batch.span_mask)

    loss = torch.zeros((), dtype=enc.dtype)
    pointer_acc = None
    if config.uses_edit:
        ins_logits, del_logits = model.pointer_logits(enc, batch.pointer_base, batch.n_gaps)
        ins_lp = torch.log_softmax(ins_logits, dim=-1)
        del_lp = torch.log_softmax(del_logits, dim=-1)
        rows = torch.arange(len(batch))
        ins_ce = -ins_lp[rows, batch.insert_ptrs].mean()
        del_ce = -del_lp[rows, batch.delete_ptrs].mean()
        loss = loss + (ins_ce + del_ce)
        with torch.no_grad():
            ok = (ins_logits.argmax(-1) == batch.insert_ptrs) & (
                del_logits.argmax(-1) == batch.delete_ptrs
            )
            pointer_acc = float(ok.to(torch.float64).mean().item())
        enc = model.condition_on_pointers(
            enc, batch.pointer_base, batch.bug_start, batch.insert_ptrs, batch.delete_ptrs
        )

    logits, _ = model.decode(batch.dec_in, enc, batch.src_padding_mask, cross_bias)
    logp = torch.log_softmax(logits, dim=-1)
    mask = batch.tgt_out != 0  # pad id is 0 by vocabulary construction
    gold_lp = logp.gather(-1, batch.tgt_out.unsqueeze(-1)).squeeze(-1)
    token_ce = -(gold_lp * mask).sum() / mask.sum()
    if config.uses_edit:
        loss = token_ce + _pointer_weight(model) * loss
    else:
        loss = token_ce

    with torch.no_grad():
        correct = (logits.argmax(-1) == batch.tgt_out) & mask
        n_correct = correct.sum(dim=1)
        n_positions = mask.sum(dim=1)
        gold_prob = (gold_lp.exp() * mask).sum(dim=1) / n_positions.clamp_min(1)

    return ForwardStats(
        loss=loss,
        token_acc=float(correct.sum().item()) / float(mask.sum().item()),
        sample_correct=[int(v) for v in n_correct],
        sample_positions=[int(v) for v in n_positions],
        sample_gold_prob=[float(v) for v in gold_prob],
        pointer_acc=pointer_acc,
    )


def _pointer_weight(model: RepairTransformer) -> float:
    return getattr(model, "_pointer_loss_weight", 1.0)


@dataclass
class EpochRecord:
    epoch: int
    teacher_forced_token_acc: float
    full_sequence_acc: float
    topk_acc: float
    mean_gold_token_prob: float
    train_loss: float


@dataclass
class TrainingCurve:
    records: list[EpochRecord] = field(default_factory=list)

    COLUMNS = (
        "epoch", "teacher_forced_token_acc", "full_sequence_acc",
        "topk_acc", "mean_gold_token_prob", "train_loss",
    )

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for r in self.records:
                writer.writerow([
                    r.epoch, f"{r.teacher_forced_token_acc:.6f}",
                    f"{r.full_sequence_acc:.6f}", f"{r.topk_acc:.6f}",
                    f"{r.mean_gold_token_prob:.6f}", f"{r.train_loss:.6f}",
                ])

    @classmethod
    def from_csv(cls, path: str | Path) -> "TrainingCurve":
        records = []
        with Path(path).open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                records.append(EpochRecord(
                    epoch=int(row["epoch"]),
                    teacher_forced_token_acc=float(row["teacher_forced_token_acc"]),
                    full_sequence_acc=float(row["full_sequence_acc"]),
                    topk_acc=float(row["topk_acc"]),
                    mean_gold_token_prob=float(row["mean_gold_token_prob"]),
                    train_loss=float(row["train_loss"]),
                ))
        return cls(records)


def teacher_forced_metrics(
    model: RepairTransformer,
    examples: list[EncodedExample],
    vocab: SubtokenVocab,
    batch_size: int = 32,
) -> tuple[float, float]:
    """(macro token accuracy, macro mean gold-token probability)."""
    dtype = model.embed.weight.dtype
    accs: list[float] = []
    probs: list[float] = []
    model.eval()
    with torch.no_grad():
        for i in range(0, len(examples), batch_size):
            batch = collate(examples[i : i + batch_size], vocab, model.config, dtype)
            stats = forward_train(model, batch)
            for c, n, p in zip(stats.sample_correct, stats.sample_positions, stats.sample_gold_prob):
                accs.append(c / n if n else 1.0)
                probs.append(p)
    return sum(accs) / len(accs), sum(probs) / len(probs)


def decode_accuracy(
    model: RepairTransformer,
    examples: list[EncodedExample],
    vocab: SubtokenVocab,
    end_marker: str,
    beam_k: int = 0,
    pointer_beam: int = 1,
) -> tuple[float, float]:
    """(greedy full-sequence accuracy, top-k beam accuracy) at text level."""
    full_hits = 0
    topk_hits = 0
    for ex in examples:
        gold = tuple(ex.gold_patch_texts)
        hyp = greedy_decode(model, vocab, ex, end_marker)
        full_hits += hyp.patch_texts == gold
        if beam_k:
            hyps = beam_search(
                model, vocab, ex, end_marker, k=beam_k,
                pointer_beam=pointer_beam if model.config.uses_edit else 1,
            )
            topk_hits += any(h.patch_texts == gold for h in hyps[:beam_k])
    n = len(examples)
    return full_hits / n, (topk_hits / n if beam_k else 0.0)


@dataclass
class TrainResult:
    curve: TrainingCurve
    best_epoch: int
    best_full_seq_acc: float
    checkpoint_paths: dict[str, Path] = field(default_factory=dict)
    stopped_early: bool = False


def train(
    model: RepairTransformer,
    vocab: SubtokenVocab,
    bpe_model: bpe_mod.BpeModel,
    train_examples: list[EncodedExample],
    valid_examples: list[EncodedExample],
    settings: TrainSettings,
    ckpt_dir: str | Path | None = None,
) -> TrainResult:
    """Adam with linear warmup; per-epoch curve on the valid split; returns
    with the best-valid-accuracy weights loaded back into the model.

    Raises TrainingDiverged as soon as a non-finite loss appears.
    """
    if not train_examples:
        raise ValueError("empty train split")
    if not valid_examples:
        raise ValueError("empty valid split")

    seed = settings.seed if settings.seed is not None else model.config.seed
    torch.manual_seed(seed)
    rng = random.Random(seed)
    model._pointer_loss_weight = settings.pointer_loss_weight

    dtype = model.embed.weight.dtype
    optimizer = torch.optim.Adam(model.parameters(), lr=settings.lr)
    step = 0
    best_acc = -1.0
    best_epoch = 0
    best_state = copy.deepcopy(model.state_dict())
    curve = TrainingCurve()
    stopped_early = False

    indices = list(range(len(train_examples)))
    for epoch in range(1, settings.epochs + 1):
        model.train()
        rng.shuffle(indices)
        losses: list[float] = []
        for start in range(0, len(indices), settings.batch_size):
            chunk = [train_examples[i] for i in indices[start : start + settings.batch_size]]
            batch = collate(chunk, vocab, model.config, dtype)
            step += 1
            warm = min(1.0, step / settings.warmup_steps) if settings.warmup_steps else 1.0
            for group in optimizer.param_groups:
                group["lr"] = settings.lr * warm
            optimizer.zero_grad()
            stats = forward_train(model, batch)
            if not torch.isfinite(stats.loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {step}: {stats.loss.item()}"
                )
            stats.loss.backward()
            if settings.grad_clip is not None:
                torch.nn.utils.clip_grad_norm_(model.parameters(), settings.grad_clip)
            optimizer.step()
            losses.append(float(stats.loss.item()))

        token_acc, gold_prob = teacher_forced_metrics(model, valid_examples, vocab)
        full_acc, topk_acc = decode_accuracy(
            model, valid_examples, vocab, bpe_model.end_marker,
            beam_k=settings.curve_beam_k, pointer_beam=settings.curve_pointer_beam,
        )
        curve.records.append(EpochRecord(
            epoch=epoch,
            teacher_forced_token_acc=token_acc,
            full_sequence_acc=full_acc,
            topk_acc=topk_acc,
            mean_gold_token_prob=gold_prob,
            train_loss=sum(losses) / len(losses),
        ))
        if full_acc > best_acc:
            best_acc = full_acc
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
        if settings.target_full_seq_acc is not None and full_acc >= settings.target_full_seq_acc:
            stopped_early = True
            break

    paths: dict[str, Path] = {}
    if ckpt_dir is not None:
        ckpt_dir = Path(ckpt_dir)
        last_path = ckpt_dir / "last.npz"
        save_checkpoint(model, vocab, bpe_model, last_path,
                        extra={"epoch": curve.records[-1].epoch if curve.records else 0})
        paths["last"] = last_path

    model.load_state_dict(best_state)
    if ckpt_dir is not None:
        best_path = Path(ckpt_dir) / "best.npz"
        save_checkpoint(model, vocab, bpe_model, best_path,
                        extra={"epoch": best_epoch, "valid_full_seq_acc": best_acc})
        paths["best"] = best_path

    return TrainResult(
        curve=curve,
        best_epoch=best_epoch,
        best_full_seq_acc=best_acc,
        checkpoint_paths=paths,
        stopped_early=stopped_early,
    )
