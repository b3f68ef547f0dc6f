"""Greedy and beam decoding for all model variants.

Hypothesis scores are plain sums of log-probabilities (pointer choices
included for the edit variants); an optional length-normalization exponent
divides by ``len**alpha`` for ranking only. Every hypothesis stores the
materialized patch both as marked subtokens and as token texts.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .. import editcodec
from .data import EncodedExample, SubtokenVocab
from .transformer import RepairTransformer


@dataclass(frozen=True)
class Hypothesis:
    patch_subs: tuple[str, ...]
    patch_texts: tuple[str, ...]
    log_prob: float
    insert_ptr: int | None = None
    delete_ptr: int | None = None
    inserted_subs: tuple[str, ...] = ()
    normalized_score: float | None = None
    terminated: bool = True  # False when decoding hit the length limit

    def score(self) -> float:
        return self.normalized_score if self.normalized_score is not None else self.log_prob


def _split_marked(subtokens: list[str], end_marker: str) -> tuple[str, ...]:
    tokens: list[str] = []
    current: list[str] = []
    for sub in subtokens:
        current.append(sub)
        if sub.endswith(end_marker):
            tokens.append("".join(current).replace(end_marker, ""))
            current = []
    if current:
        tokens.append("".join(current).replace(end_marker, ""))
    return tuple(tokens)


def _prepare(model: RepairTransformer, example: EncodedExample):
    device = model.embed.weight.device
    dtype = model.embed.weight.dtype
    src = torch.tensor([example.src_ids], dtype=torch.long, device=device)
    enc = model.encode(src)
    cross_bias = None
    if model.config.uses_context:
        span = torch.zeros(1, src.shape[1], dtype=dtype, device=device)
        start, end = example.bug_span()
        span[0, start:end] = 1.0
        cross_bias = model.cross_bias(span)
    return enc, cross_bias


def _token_logp(model, ids: list[list[int]], enc, cross_bias) -> torch.Tensor:
    """Next-token log-probabilities for each prefix in ``ids`` (n, V)."""
    tgt = torch.tensor(ids, dtype=torch.long, device=enc.device)
    enc_rep = enc.expand(len(ids), -1, -1)
    bias = None
    if cross_bias is not None:
        bias = cross_bias.expand(len(ids), -1, -1, -1)
    logits, _ = model.decode(tgt, enc_rep, cross_bias=bias)
    return torch.log_softmax(logits[:, -1, :], dim=-1)


def _greedy_tokens(
    model, vocab: SubtokenVocab, enc, cross_bias, max_len: int
) -> tuple[list[int], float, bool]:
    ids = [vocab.bos_id]
    total = 0.0
    for _ in range(max_len):
        logp = _token_logp(model, [ids], enc, cross_bias)[0]
        next_id = int(torch.argmax(logp).item())
        total += float(logp[next_id].item())
        if next_id == vocab.eos_id:
            return ids[1:], total, True
        ids.append(next_id)
    return ids[1:], total, False


def _beam_tokens(
    model, vocab: SubtokenVocab, enc, cross_bias, k: int, max_len: int
) -> list[tuple[list[int], float, bool]]:
    """Standard width-k token beam: (generated ids, log-prob, terminated).

    Unterminated sequences at the step limit are kept as truncated
    hypotheses so the caller always gets something to rank.
    """
    alive: list[tuple[list[int], float]] = [([vocab.bos_id], 0.0)]
    finished: list[tuple[list[int], float, bool]] = []
    for _ in range(max_len):
        if not alive:
            break
        logp = _token_logp(model, [ids for ids, _ in alive], enc, cross_bias)
        scores = torch.tensor([lp for _, lp in alive], dtype=logp.dtype, device=logp.device)
        candidates = scores[:, None] + logp
        flat = candidates.reshape(-1)
        top = torch.topk(flat, min(k, flat.numel()))
        vocab_size = logp.shape[1]
        next_alive: list[tuple[list[int], float]] = []
        for idx, score in zip(top.indices.tolist(), top.values.tolist()):
            beam_idx, tok = divmod(idx, vocab_size)
            if tok == vocab.eos_id:
                finished.append((alive[beam_idx][0][1:], score, True))
            else:
                next_alive.append((alive[beam_idx][0] + [tok], score))
        alive = next_alive
    finished.extend((ids[1:], lp, False) for ids, lp in alive)
    return finished


def _rank(hyps: list[Hypothesis], limit: int) -> list[Hypothesis]:
    """Deduplicate on the materialized patch (best score wins), sort by
    score descending with a stable tie-break, and truncate."""
    best: dict[tuple[str, ...], Hypothesis] = {}
    for hyp in hyps:
        cur = best.get(hyp.patch_subs)
        if cur is None or hyp.score() > cur.score():
            best[hyp.patch_subs] = hyp
    ranked = sorted(best.values(), key=lambda h: (-h.score(), h.patch_subs))
    return ranked[:limit]


def _pointer_log_probs(model, example: EncodedExample, enc):
    device = enc.device
    base = torch.tensor([example.pointer_base], device=device)
    n_gaps = torch.tensor([example.n_gaps], device=device)
    ins_logits, del_logits = model.pointer_logits(enc, base, n_gaps)
    return (
        torch.log_softmax(ins_logits[0], dim=-1),
        torch.log_softmax(del_logits[0], dim=-1),
    )


def _conditioned_enc(model, example: EncodedExample, enc, i: int, j: int):
    device = enc.device
    return model.condition_on_pointers(
        enc,
        torch.tensor([example.pointer_base], device=device),
        torch.tensor([example.bug_start], device=device),
        torch.tensor([i], device=device),
        torch.tensor([j], device=device),
    )


def beam_search(
    model: RepairTransformer,
    vocab: SubtokenVocab,
    example: EncodedExample,
    end_marker: str,
    k: int,
    pointer_beam: int = 1,
    max_len: int | None = None,
    length_norm: float = 0.0,
) -> list[Hypothesis]:
    """Top hypotheses, at most ``k * pointer_beam`` after deduplication.

    Baseline variants run a single width-k token beam over the whole patch.
    Edit variants first take the ``pointer_beam`` most probable
    (insert, delete) pairs under the joint pointer distribution (masked to
    insert <= delete), then run a width-k token beam for the inserted
    sequence under each pair; scores add the pointer log-probabilities.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    max_len = max_len if max_len is not None else model.config.max_tgt_len
    model.eval()
    with torch.no_grad():
        enc, cross_bias = _prepare(model, example)

        def finish(raw: list[tuple[list[int], float, bool]], extra_lp: float = 0.0,
                   i: int | None = None, j: int | None = None) -> list[Hypothesis]:
            out = []
            for ids, lp, terminated in raw:
                subs = [vocab.text_of(t) for t in ids]
                if i is None:
                    patch_subs = tuple(subs)
                else:
                    script = editcodec.EditScript(i, j, tuple(subs))
                    patch_subs = tuple(editcodec.apply(example.bug_subs, script))
                total = lp + extra_lp
                norm = None
                if length_norm > 0.0:
                    norm = total / max(len(ids) + 1, 1) ** length_norm
                out.append(
                    Hypothesis(
                        patch_subs=patch_subs,
                        patch_texts=_split_marked(list(patch_subs), end_marker),
                        log_prob=total,
                        insert_ptr=i,
                        delete_ptr=j,
                        inserted_subs=tuple(subs) if i is not None else (),
                        normalized_score=norm,
                        terminated=terminated,
                    )
                )
            return out

        if not model.config.uses_edit:
            raw = _beam_tokens(model, vocab, enc, cross_bias, k, max_len)
            return _rank(finish(raw), k)

        ins_lp, del_lp = _pointer_log_probs(model, example, enc)
        joint = ins_lp[:, None] + del_lp[None, :]
        gaps = joint.shape[0]
        lower = torch.tril(torch.ones(gaps, gaps, dtype=torch.bool), diagonal=-1)
        joint = joint.masked_fill(lower, float("-inf"))
        flat = joint.reshape(-1)
        n_pairs = min(pointer_beam, int(torch.isfinite(flat).sum().item()))
        top = torch.topk(flat, n_pairs)
        hyps: list[Hypothesis] = []
        for idx, pair_lp in zip(top.indices.tolist(), top.values.tolist()):
            i, j = divmod(idx, gaps)
            enc_cond = _conditioned_enc(model, example, enc, i, j)
            raw = _beam_tokens(model, vocab, enc_cond, cross_bias, k, max_len)
            hyps.extend(finish(raw, extra_lp=pair_lp, i=i, j=j))
        return _rank(hyps, k * pointer_beam)


def greedy_decode(
    model: RepairTransformer,
    vocab: SubtokenVocab,
    example: EncodedExample,
    end_marker: str,
    max_len: int | None = None,
) -> Hypothesis:
    """Argmax decoding; for edit variants the joint-argmax pointer pair is
    chosen first, then the inserted tokens are decoded greedily."""
    max_len = max_len if max_len is not None else model.config.max_tgt_len
    model.eval()
    with torch.no_grad():
        enc, cross_bias = _prepare(model, example)
        if not model.config.uses_edit:
            ids, lp, terminated = _greedy_tokens(model, vocab, enc, cross_bias, max_len)
            subs = tuple(vocab.text_of(t) for t in ids)
            return Hypothesis(
                patch_subs=subs,
                patch_texts=_split_marked(list(subs), end_marker),
                log_prob=lp,
                terminated=terminated,
            )
        ins_lp, del_lp = _pointer_log_probs(model, example, enc)
        joint = ins_lp[:, None] + del_lp[None, :]
        gaps = joint.shape[0]
        lower = torch.tril(torch.ones(gaps, gaps, dtype=torch.bool), diagonal=-1)
        joint = joint.masked_fill(lower, float("-inf"))
        idx = int(torch.argmax(joint.reshape(-1)).item())
        i, j = divmod(idx, gaps)
        pair_lp = float(joint.reshape(-1)[idx].item())
        enc_cond = _conditioned_enc(model, example, enc, i, j)
        ids, lp, terminated = _greedy_tokens(model, vocab, enc_cond, cross_bias, max_len)
        inserted = tuple(vocab.text_of(t) for t in ids)
        script = editcodec.EditScript(i, j, inserted)
        patch_subs = tuple(editcodec.apply(example.bug_subs, script))
        return Hypothesis(
            patch_subs=patch_subs,
            patch_texts=_split_marked(list(patch_subs), end_marker),
            log_prob=pair_lp + lp,
            insert_ptr=i,
            delete_ptr=j,
            inserted_subs=inserted,
            terminated=terminated,
        )


def rescore(
    model: RepairTransformer,
    vocab: SubtokenVocab,
    example: EncodedExample,
    hypothesis: Hypothesis,
) -> float:
    """Recompute a hypothesis's log-probability by teacher-forcing it."""
    model.eval()
    with torch.no_grad():
        enc, cross_bias = _prepare(model, example)
        total = 0.0
        if model.config.uses_edit:
            ins_lp, del_lp = _pointer_log_probs(model, example, enc)
            total += float(ins_lp[hypothesis.insert_ptr].item())
            total += float(del_lp[hypothesis.delete_ptr].item())
            enc = _conditioned_enc(
                model, example, enc, hypothesis.insert_ptr, hypothesis.delete_ptr
            )
            gen_ids = vocab.ids_of(hypothesis.inserted_subs)
        else:
            gen_ids = vocab.ids_of(hypothesis.patch_subs)
        targets = gen_ids + [vocab.eos_id] if hypothesis.terminated else gen_ids
        ids = [vocab.bos_id]
        for target in targets:
            logp = _token_logp(model, [ids], enc, cross_bias)[0]
            total += float(logp[target].item())
            ids.append(target)
        return total
