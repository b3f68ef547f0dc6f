"""Versioned checkpoint container.

A checkpoint is a NumPy ``.npz`` archive: entry ``__meta__`` holds a JSON
document (format name/version, model config, subtoken vocabulary, BPE merges
and end marker, plus free-form extras) and every model parameter is stored
as ``param/<state-dict-name>``. Checkpoints are therefore self-contained:
loading rebuilds the tokenizer pipeline and the model.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .. import bpe as bpe_mod
from .config import ModelConfig
from .data import SubtokenVocab
from .transformer import RepairTransformer, build_model

FORMAT_NAME = "patchlens-checkpoint"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(
    model: RepairTransformer,
    vocab: SubtokenVocab,
    bpe_model: bpe_mod.BpeModel,
    path: str | Path,
    extra: dict | None = None,
) -> None:
    meta = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "vocab": vocab.subtokens,
        "bpe": {
            "end_marker": bpe_model.end_marker,
            "merges": [list(m) for m in bpe_model.merges],
        },
        "extra": extra or {},
    }
    arrays = {
        f"param/{name}": tensor.detach().cpu().numpy()
        for name, tensor in model.state_dict().items()
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        np.savez(fh, __meta__=json.dumps(meta, ensure_ascii=False), **arrays)


def load_checkpoint(
    path: str | Path,
) -> tuple[RepairTransformer, SubtokenVocab, bpe_mod.BpeModel, dict]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        if "__meta__" not in data:
            raise CheckpointError(f"{path}: missing __meta__ entry")
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != FORMAT_NAME:
            raise CheckpointError(f"{path}: not a {FORMAT_NAME} archive")
        if meta.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported version {meta.get('version')}")
        arrays = {k: data[k] for k in data.files if k.startswith("param/")}

    config = ModelConfig.from_dict(meta["config"])
    vocab = SubtokenVocab(meta["vocab"])
    merges = [tuple(m) for m in meta["bpe"]["merges"]]
    end_marker = meta["bpe"]["end_marker"]
    bpe_vocab = {left + right for left, right in merges}
    bpe_model = bpe_mod.BpeModel(merges=merges, vocab=bpe_vocab, end_marker=end_marker)

    model = build_model(config, len(vocab))
    state = {name[len("param/") :]: torch.from_numpy(arr) for name, arr in arrays.items()}
    model.load_state_dict(state)
    model.eval()
    return model, vocab, bpe_model, meta
