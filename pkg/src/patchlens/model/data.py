"""Subtoken vocabulary and pair-to-tensor example preparation.

Sequences are built over *marked* BPE subtokens (the end marker closes each
lexer token), so a decoded subtoken stream can always be segmented back into
token texts.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .. import bpe as bpe_mod
from .. import editcodec
from ..corpus import BugFixPair, ContextMode, extract_context
from .config import ModelConfig

PAD = "<pad>"
BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
BUG_OPEN = "<bug>"
BUG_CLOSE = "</bug>"
SPECIALS = (PAD, BOS, EOS, UNK, BUG_OPEN, BUG_CLOSE)


class SubtokenVocab:
    """Bidirectional subtoken/id map with reserved specials at the front."""

    def __init__(self, subtokens: Sequence[str]):
        items = list(SPECIALS)
        seen = set(items)
        for sub in subtokens:
            if sub not in seen:
                seen.add(sub)
                items.append(sub)
        self.subtokens: list[str] = items
        self._ids = {s: i for i, s in enumerate(items)}
        self.pad_id = self._ids[PAD]
        self.bos_id = self._ids[BOS]
        self.eos_id = self._ids[EOS]
        self.unk_id = self._ids[UNK]
        self.bug_open_id = self._ids[BUG_OPEN]
        self.bug_close_id = self._ids[BUG_CLOSE]

    def __len__(self) -> int:
        return len(self.subtokens)

    def id_of(self, subtoken: str) -> int:
        return self._ids.get(subtoken, self.unk_id)

    def ids_of(self, subtokens: Iterable[str]) -> list[int]:
        return [self.id_of(s) for s in subtokens]

    def text_of(self, idx: int) -> str:
        return self.subtokens[idx]


def _pair_subtokens(
    bpe_model: bpe_mod.BpeModel, pair: BugFixPair, context_mode: ContextMode | None
) -> Iterable[str]:
    for token in pair.bug_tokens() + pair.patch_tokens():
        yield from bpe_mod.encode_marked(bpe_model, token.text)
    if context_mode is not None and context_mode.kind != "none":
        ctx = extract_context(pair, context_mode)
        for token in ctx.tokens_before + ctx.tokens_after:
            yield from bpe_mod.encode_marked(bpe_model, token.text)


def build_vocab(
    bpe_model: bpe_mod.BpeModel,
    pairs: Sequence[BugFixPair],
    context_mode: ContextMode | None = None,
) -> SubtokenVocab:
    """Vocabulary over the train pairs' subtokens, sorted for determinism.

    Pass a context mode when building for a +context variant so surrounding
    code contributes subtokens too; anything unseen maps to <unk> later.
    """
    subs: set[str] = set()
    for pair in pairs:
        subs.update(_pair_subtokens(bpe_model, pair, context_mode))
    return SubtokenVocab(sorted(subs))


@dataclass
class EncodedExample:
    """One pair prepared for the model.

    ``src_ids`` is [BOS] ... [EOS]; for context variants the buggy line is
    wrapped in <bug> ... </bug>. ``bug_start`` indexes the first bug
    subtoken within ``src_ids``; pointer gap g (0..n_bug_subs) corresponds
    to source position ``bug_start - 1 + g``.
    """

    pair_id: str
    src_ids: list[int]
    bug_start: int
    n_bug_subs: int
    bug_subs: list[str]
    patch_subs: list[str]
    tgt_ids: list[int]          # decoder supervision without BOS/EOS framing
    insert_ptr: int | None = None
    delete_ptr: int | None = None
    inserted_subs: list[str] = field(default_factory=list)
    gold_patch_texts: list[str] = field(default_factory=list)
    truncated: bool = False

    @property
    def pointer_base(self) -> int:
        return self.bug_start - 1

    @property
    def n_gaps(self) -> int:
        return self.n_bug_subs + 1

    def bug_span(self) -> tuple[int, int]:
        """Half-open source index range of the bug subtokens."""
        return self.bug_start, self.bug_start + self.n_bug_subs


class OverLengthError(ValueError):
    pass


class ExampleEncoder:
    """Turns bug/patch pairs into model-ready id sequences for one config."""

    def __init__(self, config: ModelConfig, vocab: SubtokenVocab, bpe_model: bpe_mod.BpeModel):
        self.config = config
        self.vocab = vocab
        self.bpe_model = bpe_model

    def _subs(self, texts: Iterable[str]) -> list[str]:
        out: list[str] = []
        for text in texts:
            out.extend(bpe_mod.encode_marked(self.bpe_model, text))
        return out

    def _context_subs(self, pair: BugFixPair) -> tuple[list[str], list[str]]:
        """Whole-file context trimmed symmetrically to the subtoken budget:
        the lines nearest the bug win, budget leftover on one side flows to
        the other."""
        ctx = extract_context(pair, ContextMode.whole_file())
        before = self._subs(t.text for t in ctx.tokens_before)
        after = self._subs(t.text for t in ctx.tokens_after)
        budget = self.config.context_budget
        half = budget // 2
        take_before = min(len(before), max(half, budget - len(after)))
        take_after = min(len(after), budget - take_before)
        return before[len(before) - take_before :], after[:take_after]

    def encode(self, pair: BugFixPair, for_training: bool = True) -> EncodedExample:
        cfg = self.config
        vocab = self.vocab
        bug_subs = self._subs(t.text for t in pair.bug_tokens())
        patch_subs = self._subs(t.text for t in pair.patch_tokens())
        truncated = False

        if cfg.uses_context:
            ctx_before, ctx_after = self._context_subs(pair)
            bug_wrapped = [BUG_OPEN] + bug_subs + [BUG_CLOSE]
            overhead = 2  # BOS/EOS
            room = cfg.max_src_len - overhead - len(bug_wrapped)
            if room < 0:
                truncated = True
                ctx_before, ctx_after = [], []
            else:
                while len(ctx_before) + len(ctx_after) > room:
                    # trim outward, longer side first
                    if len(ctx_before) >= len(ctx_after) and ctx_before:
                        ctx_before = ctx_before[1:]
                    else:
                        ctx_after = ctx_after[:-1]
                    truncated = True
            src_subs = ctx_before + bug_wrapped + ctx_after
            bug_start = 1 + len(ctx_before) + 1
        else:
            src_subs = list(bug_subs)
            bug_start = 1

        src_ids = [vocab.bos_id] + vocab.ids_of(src_subs) + [vocab.eos_id]
        if len(src_ids) > cfg.max_src_len:
            if cfg.overlength == "reject":
                raise OverLengthError(
                    f"source length {len(src_ids)} exceeds max_src_len {cfg.max_src_len}"
                )
            truncated = True
            kept_subs = cfg.max_src_len - 2
            src_ids = [vocab.bos_id] + vocab.ids_of(src_subs[:kept_subs]) + [vocab.eos_id]
            bug_subs = bug_subs[: max(0, kept_subs - (bug_start - 1))]

        example = EncodedExample(
            pair_id=pair.pair_id,
            src_ids=src_ids,
            bug_start=bug_start,
            n_bug_subs=len(bug_subs),
            bug_subs=bug_subs,
            patch_subs=patch_subs,
            tgt_ids=[],
            gold_patch_texts=[t.text for t in pair.patch_tokens()],
            truncated=truncated,
        )

        if cfg.uses_edit:
            script = editcodec.diff(bug_subs, patch_subs)
            example.insert_ptr = script.insert_ptr
            example.delete_ptr = script.delete_ptr
            example.inserted_subs = list(script.inserted)
            tgt_subs = example.inserted_subs
        else:
            tgt_subs = patch_subs

        if len(tgt_subs) + 1 > cfg.max_tgt_len:
            if cfg.overlength == "reject":
                raise OverLengthError(
                    f"target length {len(tgt_subs) + 1} exceeds max_tgt_len {cfg.max_tgt_len}"
                )
            if for_training:
                example.truncated = True
                tgt_subs = tgt_subs[: cfg.max_tgt_len - 1]
        example.tgt_ids = self.vocab.ids_of(tgt_subs)
        return example

    def encode_all(self, pairs: Sequence[BugFixPair], for_training: bool = True) -> list[EncodedExample]:
        return [self.encode(p, for_training) for p in pairs]
