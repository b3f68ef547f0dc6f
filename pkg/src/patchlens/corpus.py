"""Mining single-line bug fixes from git history and managing the corpus.

A corpus is a JSONL file of pair records plus a side table holding each
parent-commit file text once (keyed by repo/commit/path), so context
extraction stays cheap without bloating the main file.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import lexer
from .lexer import Token

DEFAULT_KEYWORDS = frozenset({"fix", "bug", "defect", "fault", "error", "patch", "repair"})

# Substrings removed from the lowercased message before the keyword check,
# so "prefix"/"suffix"/"postfix" do not count as fixes.
KEYWORD_BLOCKLIST = ("prefix", "suffix", "postfix")


class CorpusError(Exception):
    pass


def normalize_ws(text: str) -> str:
    """Collapse whitespace runs (tabs included) to single spaces, trim ends."""
    return " ".join(text.split())


@dataclass(frozen=True)
class BugFixPair:
    repo_id: str
    org_id: str
    commit_hash: str
    file_path: str
    line_number: int
    bug_line: str
    patch_line: str
    file_before: str
    commit_message: str

    @property
    def file_key(self) -> str:
        return f"{self.repo_id}:{self.commit_hash}:{self.file_path}"

    @property
    def pair_id(self) -> str:
        ident = f"{self.repo_id}:{self.commit_hash}:{self.file_path}:{self.line_number}"
        return hashlib.sha1(ident.encode("utf-8")).hexdigest()[:12]

    def bug_tokens(self) -> list[Token]:
        return lexer.tokenize(self.bug_line)

    def patch_tokens(self) -> list[Token]:
        return lexer.tokenize(self.patch_line)


def revalidate(pair: BugFixPair) -> bool:
    """Re-derive the pair from its file: applying the patch and re-diffing
    must reproduce exactly the same single-line change."""
    lines = pair.file_before.splitlines()
    if not 1 <= pair.line_number <= len(lines):
        return False
    if normalize_ws(pair.bug_line) == normalize_ws(pair.patch_line):
        return False
    if normalize_ws(lines[pair.line_number - 1]) != normalize_ws(pair.bug_line):
        return False
    patched = list(lines)
    patched[pair.line_number - 1] = pair.patch_line
    found = extract_single_line_change(pair.file_before, "\n".join(patched))
    return found == (pair.line_number, lines[pair.line_number - 1], pair.patch_line)


@dataclass(frozen=True)
class ContextMode:
    """None (bug line only), a symmetric window of w lines per side, or the
    whole file minus the bug line."""

    kind: str
    window: int | None = None

    @classmethod
    def none(cls) -> "ContextMode":
        return cls("none")

    @classmethod
    def lines(cls, window: int) -> "ContextMode":
        if window < 1:
            raise ValueError(f"window must be >= 1, got {window}")
        return cls("lines", window)

    @classmethod
    def whole_file(cls) -> "ContextMode":
        return cls("whole_file")

    @classmethod
    def parse(cls, text: str) -> "ContextMode":
        if text == "none":
            return cls.none()
        if text in ("whole-file", "whole_file"):
            return cls.whole_file()
        if text.startswith("lines:"):
            return cls.lines(int(text.split(":", 1)[1]))
        raise ValueError(f"unknown context mode: {text!r} (none | lines:N | whole-file)")

    def __str__(self) -> str:
        if self.kind == "lines":
            return f"lines:{self.window}"
        return "whole-file" if self.kind == "whole_file" else self.kind


@dataclass
class ContextSlice:
    mode: ContextMode
    tokens_before: list[Token]
    tokens_after: list[Token]


@dataclass
class DatasetSplit:
    train: list[BugFixPair]
    valid: list[BugFixPair]
    test: list[BugFixPair]
    seed: int

    def parts(self) -> dict[str, list[BugFixPair]]:
        return {"train": self.train, "valid": self.valid, "test": self.test}


def is_bugfix_message(message: str, keywords: Iterable[str] = DEFAULT_KEYWORDS) -> bool:
    cleaned = message.lower()
    for blocked in KEYWORD_BLOCKLIST:
        cleaned = cleaned.replace(blocked, "")
    return any(kw in cleaned for kw in keywords)


def extract_single_line_change(
    parent_file: str, child_file: str
) -> tuple[int, str, str] | None:
    """(1-based line number, bug line, patch line) iff exactly one line
    differs after whitespace normalization; None otherwise.

    Line insertions/deletions change the line count and never qualify, and
    neither do pure-whitespace edits.
    """
    parent_lines = parent_file.splitlines()
    child_lines = child_file.splitlines()
    if len(parent_lines) != len(child_lines):
        return None
    changed = [
        i
        for i, (a, b) in enumerate(zip(parent_lines, child_lines))
        if normalize_ws(a) != normalize_ws(b)
    ]
    if len(changed) != 1:
        return None
    i = changed[0]
    return i + 1, parent_lines[i], child_lines[i]


@dataclass
class MiningLimits:
    max_commits: int | None = None
    max_pairs: int | None = None


@dataclass
class MiningStats:
    commits_seen: int = 0
    pairs_emitted: int = 0
    undecodable_files: int = 0


def _git(repo_path: Path, *args: str) -> bytes:
    try:
        proc = subprocess.run(
            ["git", "-C", str(repo_path), *args],
            capture_output=True,
            check=True,
        )
    except FileNotFoundError as exc:
        raise CorpusError("git executable not found") from exc
    except subprocess.CalledProcessError as exc:
        raise CorpusError(
            f"git {' '.join(args)} failed in {repo_path}: {exc.stderr.decode(errors='replace').strip()}"
        ) from exc
    return proc.stdout


def _repo_org(repo_dir_name: str) -> str:
    return repo_dir_name.split("__", 1)[0]


def _commit_log(repo_path: Path) -> list[tuple[str, list[str], str]]:
    """(hash, parent hashes, message) in topological oldest-first order."""
    raw = _git(
        repo_path, "log", "--topo-order", "--reverse", "--format=%H%x01%P%x01%B%x02"
    ).decode("utf-8", errors="replace")
    entries = []
    for chunk in raw.split("\x02"):
        chunk = chunk.lstrip("\n")
        if not chunk.strip():
            continue
        commit_hash, parents, message = chunk.split("\x01", 2)
        entries.append((commit_hash, parents.split(), message))
    return entries


def mine_repo(
    repo_path: str | Path,
    keywords: Iterable[str] = DEFAULT_KEYWORDS,
    lang_ext: str = ".java",
    limits: MiningLimits | None = None,
    stats: MiningStats | None = None,
    repo_id: str | None = None,
    org_id: str | None = None,
) -> Iterator[BugFixPair]:
    """Yield qualifying single-line fixes from one clone, oldest first.

    A commit qualifies when its message passes the keyword check, it has
    exactly one parent, touches exactly one file with the target extension,
    and that file changed in exactly one (non-whitespace) line. Undecodable
    blobs are counted on ``stats`` and skipped; an unreadable repository is
    fatal.
    """
    repo_path = Path(repo_path)
    if not repo_path.is_dir():
        raise CorpusError(f"not a directory: {repo_path}")
    limits = limits or MiningLimits()
    stats = stats if stats is not None else MiningStats()
    repo_id = repo_id if repo_id is not None else repo_path.name
    org_id = org_id if org_id is not None else _repo_org(repo_id)
    keywords = frozenset(keywords)

    for commit_hash, parents, message in _commit_log(repo_path):
        if limits.max_commits is not None and stats.commits_seen >= limits.max_commits:
            return
        stats.commits_seen += 1
        if len(parents) != 1:
            continue
        if not is_bugfix_message(message, keywords):
            continue

        name_status = _git(
            repo_path, "diff-tree", "-r", "--no-renames", "--name-status",
            parents[0], commit_hash,
        ).decode("utf-8", errors="replace")
        entries = [line.split("\t", 1) for line in name_status.splitlines() if line]
        if len(entries) != 1:
            continue
        status, path = entries[0]
        if status != "M" or not path.endswith(lang_ext):
            continue

        try:
            before = _git(repo_path, "show", f"{parents[0]}:{path}").decode("utf-8")
            after = _git(repo_path, "show", f"{commit_hash}:{path}").decode("utf-8")
        except UnicodeDecodeError:
            stats.undecodable_files += 1
            continue

        found = extract_single_line_change(before, after)
        if found is None:
            continue
        line_number, bug_line, patch_line = found
        yield BugFixPair(
            repo_id=repo_id,
            org_id=org_id,
            commit_hash=commit_hash,
            file_path=path,
            line_number=line_number,
            bug_line=bug_line,
            patch_line=patch_line,
            file_before=before,
            commit_message=message,
        )
        stats.pairs_emitted += 1
        if limits.max_pairs is not None and stats.pairs_emitted >= limits.max_pairs:
            return


def discover_repos(root: str | Path) -> list[Path]:
    """Immediate subdirectories of ``root`` that look like git clones."""
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"not a directory: {root}")
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / ".git").exists())


def extract_context(pair: BugFixPair, mode: ContextMode) -> ContextSlice:
    """Lexed context lines around the bug; the buggy line itself is excluded
    and windows are clipped at file boundaries."""
    lines = pair.file_before.splitlines()
    if not 1 <= pair.line_number <= len(lines):
        raise CorpusError(
            f"line {pair.line_number} out of range for {pair.file_key} "
            f"({len(lines)} lines)"
        )
    idx = pair.line_number - 1
    if mode.kind == "none":
        before_lines: list[str] = []
        after_lines: list[str] = []
    elif mode.kind == "lines":
        w = mode.window or 0
        before_lines = lines[max(0, idx - w) : idx]
        after_lines = lines[idx + 1 : idx + 1 + w]
    elif mode.kind == "whole_file":
        before_lines = lines[:idx]
        after_lines = lines[idx + 1 :]
    else:
        raise ValueError(f"unknown context mode kind: {mode.kind}")

    tokens_before: list[Token] = []
    for line in before_lines:
        tokens_before.extend(lexer.tokenize(line))
    tokens_after: list[Token] = []
    for line in after_lines:
        tokens_after.extend(lexer.tokenize(line))
    return ContextSlice(mode=mode, tokens_before=tokens_before, tokens_after=tokens_after)


def _org_sort_key(seed: int, org_id: str) -> str:
    return hashlib.sha256(f"{seed}:{org_id}".encode("utf-8")).hexdigest()


def split_dataset(
    pairs: Sequence[BugFixPair],
    ratios: tuple[float, float, float] = (0.9, 0.05, 0.05),
    seed: int = 0,
) -> DatasetSplit:
    """Org-disjoint train/valid/test split.

    Organizations are ordered by a seeded hash and assigned whole to the
    first part whose pair-count quota is not yet met (train, then valid;
    test absorbs the remainder). The partition is total, disjoint, and
    deterministic for a fixed seed.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise CorpusError(f"ratios must sum to 1, got {ratios}")
    if len(ratios) != 3:
        raise CorpusError("expected exactly three ratios")

    by_org: dict[str, list[BugFixPair]] = {}
    for pair in pairs:
        by_org.setdefault(pair.org_id, []).append(pair)
    if len(by_org) < 3:
        raise CorpusError(f"need at least 3 organizations to split, got {len(by_org)}")

    total = len(pairs)
    quotas = [ratios[0] * total, ratios[1] * total]

    shuffled = sorted(by_org, key=lambda org: _org_sort_key(seed, org))
    parts: list[list[BugFixPair]] = [[], [], []]
    counts = [0, 0, 0]
    for org in shuffled:
        if counts[0] < quotas[0]:
            target = 0
        elif counts[1] < quotas[1]:
            target = 1
        else:
            target = 2
        parts[target].extend(by_org[org])
        counts[target] += len(by_org[org])

    return DatasetSplit(train=parts[0], valid=parts[1], test=parts[2], seed=seed)


def _pair_dedup_key(pair: BugFixPair) -> tuple[tuple[str, ...], tuple[str, ...]]:
    return (
        tuple(t.text for t in pair.bug_tokens()),
        tuple(t.text for t in pair.patch_tokens()),
    )


def dedup_test(split: DatasetSplit) -> DatasetSplit:
    """Drop test pairs whose (bug tokens, patch tokens) already occur in
    train, valid, or earlier in test."""
    seen = {_pair_dedup_key(p) for p in split.train}
    seen.update(_pair_dedup_key(p) for p in split.valid)
    kept: list[BugFixPair] = []
    for pair in split.test:
        key = _pair_dedup_key(pair)
        if key in seen:
            continue
        seen.add(key)
        kept.append(pair)
    return replace(split, test=kept)


# ---------------------------------------------------------------------------
# Persistence: one JSON object per line; file texts stored once in a side
# table keyed by (repo, commit, path).
# ---------------------------------------------------------------------------

PAIR_FIELDS = (
    "repo_id", "org_id", "commit_hash", "file_path", "line_number",
    "bug_line", "patch_line", "commit_message",
)


def files_path_for(corpus_path: str | Path) -> Path:
    corpus_path = Path(corpus_path)
    if corpus_path.name.endswith(".jsonl"):
        return corpus_path.with_name(corpus_path.name[: -len(".jsonl")] + ".files.jsonl")
    return corpus_path.with_name(corpus_path.name + ".files.jsonl")


def write_corpus(pairs: Iterable[BugFixPair], path: str | Path) -> int:
    """Write pair records and the file side table; returns the pair count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    files_path = files_path_for(path)
    count = 0
    seen_files: set[str] = set()
    with path.open("w", encoding="utf-8") as pair_out, files_path.open(
        "w", encoding="utf-8"
    ) as files_out:
        for pair in pairs:
            record = {name: getattr(pair, name) for name in PAIR_FIELDS}
            record["file_key"] = pair.file_key
            pair_out.write(json.dumps(record, ensure_ascii=False) + "\n")
            if pair.file_key not in seen_files:
                seen_files.add(pair.file_key)
                files_out.write(
                    json.dumps(
                        {"file_key": pair.file_key, "text": pair.file_before},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
            count += 1
    return count


def read_corpus(path: str | Path, files_path: str | Path | None = None) -> list[BugFixPair]:
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus not found: {path}")
    files_path = Path(files_path) if files_path is not None else files_path_for(path)
    if not files_path.is_file():
        raise CorpusError(f"corpus file table not found: {files_path}")

    file_texts: dict[str, str] = {}
    with files_path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                record = json.loads(line)
                file_texts[record["file_key"]] = record["text"]

    pairs: list[BugFixPair] = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            key = record["file_key"]
            if key not in file_texts:
                raise CorpusError(f"missing file table entry for {key}")
            pairs.append(
                BugFixPair(
                    file_before=file_texts[key],
                    **{name: record[name] for name in PAIR_FIELDS},
                )
            )
    return pairs


def write_split(split: DatasetSplit, out_dir: str | Path) -> dict[str, Path]:
    """Write train/valid/test JSONL files (each with its own file table)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for name, part in split.parts().items():
        part_path = out_dir / f"{name}.jsonl"
        write_corpus(part, part_path)
        paths[name] = part_path
    return paths


def read_split(split_dir: str | Path, seed: int = 0) -> DatasetSplit:
    split_dir = Path(split_dir)
    parts = {}
    for name in ("train", "valid", "test"):
        parts[name] = read_corpus(split_dir / f"{name}.jsonl")
    return DatasetSplit(train=parts["train"], valid=parts["valid"], test=parts["test"], seed=seed)


def corpus_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()
