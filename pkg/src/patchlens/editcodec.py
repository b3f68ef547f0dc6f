"""Pointer-based edit scripts between a buggy and a patched token sequence.

A script records where the shared prefix of the two sequences ends
(``insert_ptr``), where the shared suffix of the bug begins (``delete_ptr``)
and the tokens the patch puts in between. Applying a script is pure list
surgery, so ``apply(bug, diff(bug, patch)) == patch`` holds for every pair.

The codec is agnostic to token granularity: it works equally on lexer token
texts and on BPE subtoken sequences.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from collections.abc import Sequence


class EditClass(enum.Enum):
    NO_CHANGE = "NoChange"
    ADD_ONLY = "AddOnly"
    DELETE_ONLY = "DeleteOnly"
    REPLACE = "Replace"


@dataclass(frozen=True)
class EditScript:
    """``bug[0:insert_ptr) ++ inserted ++ bug[delete_ptr:)`` is the patch.

    An empty deletion span is encoded as ``insert_ptr == delete_ptr``.
    """

    insert_ptr: int
    delete_ptr: int
    inserted: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not 0 <= self.insert_ptr <= self.delete_ptr:
            raise ValueError(
                f"invalid pointers: insert={self.insert_ptr}, delete={self.delete_ptr}"
            )

    @property
    def edit_class(self) -> EditClass:
        return classify(self)


def diff(bug: Sequence, patch: Sequence) -> EditScript:
    """Prefix-greedy pointer diff.

    The full longest common prefix is taken first; the longest common suffix
    is then capped so the two regions cannot overlap. The cap makes the
    script unique and deterministic when prefix and suffix compete for the
    same tokens (e.g. ``[a] -> [a, a]``).
    """
    max_overlap = min(len(bug), len(patch))

    prefix = 0
    while prefix < max_overlap and bug[prefix] == patch[prefix]:
        prefix += 1

    suffix = 0
    cap = max_overlap - prefix
    while suffix < cap and bug[len(bug) - 1 - suffix] == patch[len(patch) - 1 - suffix]:
        suffix += 1

    return EditScript(
        insert_ptr=prefix,
        delete_ptr=len(bug) - suffix,
        inserted=tuple(patch[prefix : len(patch) - suffix]),
    )


def apply(bug: Sequence, script: EditScript) -> list:
    """Materialize the patch; raises on pointers that fall outside the bug."""
    if script.delete_ptr > len(bug):
        raise ValueError(
            f"delete_ptr {script.delete_ptr} out of range for bug of length {len(bug)}"
        )
    return list(bug[: script.insert_ptr]) + list(script.inserted) + list(bug[script.delete_ptr :])


def classify(script: EditScript) -> EditClass:
    span_empty = script.insert_ptr == script.delete_ptr
    if span_empty and not script.inserted:
        return EditClass.NO_CHANGE
    if span_empty:
        return EditClass.ADD_ONLY
    if not script.inserted:
        return EditClass.DELETE_ONLY
    return EditClass.REPLACE
