"""Byte-pair encoding over lexer tokens.

BPE is word-level here: a "word" is one lexer token, and merges never cross
token boundaries. Every word's final character carries a reserved end marker
so merges can distinguish word-final from word-internal positions; the
public :func:`encode` strips the marker, while :func:`encode_marked` keeps
it for consumers that need to reassemble token boundaries from a flat
subtoken stream (the repair models do).

Training is deterministic: the most frequent adjacent pair wins each round,
ties broken by lexicographically smallest ``(left, right)``.
"""

from __future__ import annotations

import heapq
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

# Private-use codepoint: effectively cannot occur in real source text, which
# keeps the "marker never collides with corpus text" invariant checkable.
DEFAULT_END_MARKER = ""

_FORMAT_NAME = "patchlens-bpe"
_FORMAT_VERSION = 1


class BpeError(ValueError):
    pass


@dataclass
class BpeModel:
    merges: list[tuple[str, str]]
    vocab: set[str]
    end_marker: str = DEFAULT_END_MARKER
    _ranks: dict[tuple[str, str], int] = field(init=False, repr=False)
    _cache: dict[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._cache = {}


def _word_symbols(text: str, marker: str) -> tuple[str, ...]:
    """'abc' -> ('a', 'b', 'c', '<marker>').

    The marker starts as its own symbol; merges may later fold it into the
    word's final subtoken.
    """
    return tuple(text) + (marker,)


def _merge_word(symbols: list[str], left: str, right: str) -> list[str]:
    """Replace adjacent (left, right) with left+right, scanning left to right."""
    merged = left + right
    out: list[str] = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == left and symbols[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def train(
    token_stream: Iterable[str],
    num_merges: int,
    end_marker: str = DEFAULT_END_MARKER,
) -> BpeModel:
    """Learn ``num_merges`` merge rules from a stream of token texts.

    Pair counts are frequency-weighted over distinct token texts and updated
    incrementally (only words containing the merged pair are touched); a lazy
    max-heap keeps best-pair selection cheap. Runs until the merge budget or
    the supply of adjacent pairs is exhausted.
    """
    if num_merges < 0:
        raise BpeError(f"num_merges must be >= 0, got {num_merges}")

    freqs = Counter()
    for text in token_stream:
        if not text:
            continue
        if end_marker in text:
            raise BpeError(f"token {text!r} contains the reserved end marker")
        freqs[text] += 1

    words: list[list] = [[list(_word_symbols(text, end_marker)), n] for text, n in sorted(freqs.items())]

    pair_counts: Counter = Counter()
    pair_words: dict[tuple[str, str], set[int]] = {}
    for idx, (symbols, n) in enumerate(words):
        for pair in zip(symbols, symbols[1:]):
            pair_counts[pair] += n
            pair_words.setdefault(pair, set()).add(idx)

    # Heap entries are (-count, pair); stale entries are skipped on pop.
    heap = [(-c, p) for p, c in pair_counts.items()]
    heapq.heapify(heap)

    merges: list[tuple[str, str]] = []
    while len(merges) < num_merges and heap:
        neg_count, pair = heapq.heappop(heap)
        count = pair_counts.get(pair, 0)
        if count <= 0:
            continue
        if -neg_count != count:
            heapq.heappush(heap, (-count, pair))
            continue

        left, right = pair
        for idx in sorted(pair_words.get(pair, ())):
            symbols, n = words[idx]
            for p in zip(symbols, symbols[1:]):
                pair_counts[p] -= n
                s = pair_words.get(p)
                if s is not None:
                    s.discard(idx)
            new_symbols = _merge_word(symbols, left, right)
            words[idx][0] = new_symbols
            for p in zip(new_symbols, new_symbols[1:]):
                pair_counts[p] += n
                pair_words.setdefault(p, set()).add(idx)
                heapq.heappush(heap, (-pair_counts[p], p))
        pair_counts.pop(pair, None)
        pair_words.pop(pair, None)
        merges.append(pair)

    vocab: set[str] = set()
    for symbols, _ in words:
        vocab.update(symbols)
    for left, right in merges:
        vocab.add(left + right)
    vocab |= {s[: -len(end_marker)] for s in vocab if s.endswith(end_marker) and len(s) > len(end_marker)}

    return BpeModel(merges=merges, vocab=vocab, end_marker=end_marker)


def encode_marked(model: BpeModel, token_text: str) -> list[str]:
    """Encode to subtokens, keeping the end marker on the final subtoken.

    Merges apply in creation order, each replacing all of its adjacent
    occurrences once; this reproduces exactly the segmentation the training
    corpus ended up with. Unseen characters pass through as singletons.
    """
    if not token_text:
        return []
    cached = model._cache.get(token_text)
    if cached is not None:
        return list(cached)
    if model.end_marker in token_text:
        raise BpeError(f"token {token_text!r} contains the reserved end marker")

    symbols = list(_word_symbols(token_text, model.end_marker))
    ranks = model._ranks
    floor = 0
    while len(symbols) > 1:
        best_rank = None
        best_pair = None
        for pair in zip(symbols, symbols[1:]):
            rank = ranks.get(pair)
            if rank is not None and rank >= floor and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_pair = pair
        if best_pair is None:
            break
        symbols = _merge_word(symbols, best_pair[0], best_pair[1])
        floor = best_rank

    model._cache[token_text] = tuple(symbols)
    return symbols


def encode(model: BpeModel, token_text: str) -> list[str]:
    """Encode to subtokens with the end marker stripped."""
    symbols = encode_marked(model, token_text)
    if symbols:
        if symbols[-1] == model.end_marker:
            symbols = symbols[:-1]
        elif symbols[-1].endswith(model.end_marker):
            symbols = symbols[:-1] + [symbols[-1][: -len(model.end_marker)]]
    return symbols


def decode(model: BpeModel, subtokens: Iterable[str]) -> str:
    """Inverse of encode for a single token: strip markers and concatenate."""
    return "".join(subtokens).replace(model.end_marker, "")


def split_stream(model: BpeModel, subtokens: Iterable[str]) -> list[str]:
    """Split a flat marked-subtoken stream into token texts.

    A subtoken ending with the end marker closes the current token. A
    trailing run without a marker (a truncated word) is emitted as-is.
    """
    tokens: list[str] = []
    current: list[str] = []
    marker = model.end_marker
    for sub in subtokens:
        current.append(sub)
        if sub.endswith(marker):
            tokens.append("".join(current).replace(marker, ""))
            current = []
    if current:
        tokens.append("".join(current).replace(marker, ""))
    return tokens


def _escape(symbol: str) -> str:
    return (
        symbol.replace("\\", "\\\\")
        .replace(" ", "\\s")
        .replace("\n", "\\n")
        .replace("\t", "\\t")
    )


def _unescape(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "s": " ", "n": "\n", "t": "\t"}.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def save(model: BpeModel, path: str | Path) -> None:
    """Header line (format name, version, marker), then one merge per line.

    Symbols are space-separated with backslash escapes for embedded spaces,
    so string-literal tokens round-trip.
    """
    lines = [f"{_FORMAT_NAME} {_FORMAT_VERSION} {_escape(model.end_marker)}"]
    lines.extend(f"{_escape(left)} {_escape(right)}" for left, right in model.merges)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load(path: str | Path) -> BpeModel:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise BpeError(f"{path}: empty model file")
    header = lines[0].split(" ")
    if len(header) != 3 or header[0] != _FORMAT_NAME:
        raise BpeError(f"{path}: not a {_FORMAT_NAME} file")
    if int(header[1]) != _FORMAT_VERSION:
        raise BpeError(f"{path}: unsupported version {header[1]}")
    end_marker = _unescape(header[2])

    merges: list[tuple[str, str]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(" ")
        if len(parts) != 2:
            raise BpeError(f"{path}:{lineno}: expected two space-separated symbols")
        merges.append((_unescape(parts[0]), _unescape(parts[1])))

    vocab = {left + right for left, right in merges}
    vocab |= {s[: -len(end_marker)] for s in vocab if s.endswith(end_marker) and len(s) > len(end_marker)}
    return BpeModel(merges=merges, vocab=vocab, end_marker=end_marker)
