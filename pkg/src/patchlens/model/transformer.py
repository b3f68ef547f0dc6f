"""Transformer encoder-decoder with optional edit-pointer heads and a
learned attention bias toward the buggy source span.

Layers are pre-norm with GELU feed-forwards; attention is implemented
directly (rather than via ``nn.MultiheadAttention``) so decoder cross
attention can take an additive logit bias and report its weights.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .config import ModelConfig

NEG_INF = float("-inf")


def sinusoidal_positions(max_len: int, d_model: int) -> torch.Tensor:
    position = torch.arange(max_len, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, d_model, 2, dtype=torch.float64) * (-math.log(10000.0) / d_model)
    )
    enc = torch.zeros(max_len, d_model, dtype=torch.float64)
    enc[:, 0::2] = torch.sin(position * div)
    enc[:, 1::2] = torch.cos(position * div[: d_model // 2])
    return enc


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int, dropout: float):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = d_model // n_heads
        self.q_proj = nn.Linear(d_model, d_model)
        self.k_proj = nn.Linear(d_model, d_model)
        self.v_proj = nn.Linear(d_model, d_model)
        self.out_proj = nn.Linear(d_model, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(
        self,
        query: torch.Tensor,
        key_value: torch.Tensor,
        key_padding_mask: torch.Tensor | None = None,
        causal: bool = False,
        logit_bias: torch.Tensor | None = None,
        need_weights: bool = False,
    ) -> tuple[torch.Tensor, torch.Tensor | None]:
        bsz, tq, _ = query.shape
        tk = key_value.shape[1]

        def split(x: torch.Tensor, t: int) -> torch.Tensor:
            return x.view(bsz, t, self.n_heads, self.head_dim).transpose(1, 2)

        q = split(self.q_proj(query), tq)
        k = split(self.k_proj(key_value), tk)
        v = split(self.v_proj(key_value), tk)

        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        if logit_bias is not None:
            scores = scores + logit_bias
        if causal:
            mask = torch.triu(
                torch.ones(tq, tk, dtype=torch.bool, device=scores.device), diagonal=1
            )
            scores = scores.masked_fill(mask, NEG_INF)
        if key_padding_mask is not None:
            scores = scores.masked_fill(key_padding_mask[:, None, None, :], NEG_INF)

        attn = torch.softmax(scores, dim=-1)
        out = self.dropout(attn) @ v
        out = out.transpose(1, 2).reshape(bsz, tq, -1)
        return self.out_proj(out), (attn if need_weights else None)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, ff_dim: int, dropout: float):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(d_model, ff_dim),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(ff_dim, d_model),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class EncoderLayer(nn.Module):
    def __init__(self, d_model: int, n_heads: int, ff_dim: int, dropout: float):
        super().__init__()
        self.ln1 = nn.LayerNorm(d_model)
        self.attn = MultiHeadAttention(d_model, n_heads, dropout)
        self.ln2 = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_dim, dropout)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, key_padding_mask: torch.Tensor | None) -> torch.Tensor:
        h = self.ln1(x)
        attn_out, _ = self.attn(h, h, key_padding_mask=key_padding_mask)
        x = x + self.dropout(attn_out)
        x = x + self.dropout(self.ff(self.ln2(x)))
        return x


class DecoderLayer(nn.Module):
    def __init__(self, d_model: int, n_heads: int, ff_dim: int, dropout: float):
        super().__init__()
        self.ln1 = nn.LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, n_heads, dropout)
        self.ln2 = nn.LayerNorm(d_model)
        self.cross_attn = MultiHeadAttention(d_model, n_heads, dropout)
        self.ln3 = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_dim, dropout)
        self.dropout = nn.Dropout(dropout)

    def forward(
        self,
        x: torch.Tensor,
        enc: torch.Tensor,
        src_padding_mask: torch.Tensor | None,
        cross_bias: torch.Tensor | None = None,
        need_weights: bool = False,
    ) -> tuple[torch.Tensor, torch.Tensor | None]:
        h = self.ln1(x)
        self_out, _ = self.self_attn(h, h, causal=True)
        x = x + self.dropout(self_out)
        cross_out, weights = self.cross_attn(
            self.ln2(x),
            enc,
            key_padding_mask=src_padding_mask,
            logit_bias=cross_bias,
            need_weights=need_weights,
        )
        x = x + self.dropout(cross_out)
        x = x + self.dropout(self.ff(self.ln3(x)))
        return x, weights


class RepairTransformer(nn.Module):
    """Encoder-decoder over subtoken ids.

    The edit variants add two pointer heads over encoder states (insertion
    gap and deletion end) plus two conditioning vectors that mark a chosen
    pointer pair on the encoder output. The context variants add a learned
    scalar that is summed onto every decoder cross-attention logit whose key
    lies inside the buggy span.
    """

    def __init__(self, config: ModelConfig, vocab_size: int):
        super().__init__()
        self.config = config
        self.vocab_size = vocab_size
        d = config.d_model
        self.embed = nn.Embedding(vocab_size, d, padding_idx=0)
        self.input_dropout = nn.Dropout(config.dropout)
        max_pos = max(config.max_src_len, config.max_tgt_len) + 8
        self.register_buffer("pos_enc", sinusoidal_positions(max_pos, d), persistent=False)
        self.enc_layers = nn.ModuleList(
            EncoderLayer(d, config.n_heads, config.ff_dim, config.dropout)
            for _ in range(config.n_enc_layers)
        )
        self.enc_norm = nn.LayerNorm(d)
        self.dec_layers = nn.ModuleList(
            DecoderLayer(d, config.n_heads, config.ff_dim, config.dropout)
            for _ in range(config.n_dec_layers)
        )
        self.dec_norm = nn.LayerNorm(d)
        self.out_proj = nn.Linear(d, vocab_size)

        if config.uses_edit:
            self.ins_head = nn.Linear(d, 1)
            self.del_head = nn.Linear(d, 1)
            self.ins_gap_emb = nn.Parameter(torch.zeros(d))
            self.del_span_emb = nn.Parameter(torch.zeros(d))
        if config.uses_context:
            self.attn_bias = nn.Parameter(torch.zeros(()))

        self._init_parameters()

    def _init_parameters(self) -> None:
        # Embeddings at d^-1/2 and scaled by sqrt(d) on lookup, so token
        # identity is not drowned out by the unit-magnitude position signal.
        nn.init.normal_(self.embed.weight, mean=0.0, std=self.config.d_model ** -0.5)
        with torch.no_grad():
            self.embed.weight[self.embed.padding_idx].zero_()
        nn.init.normal_(self.out_proj.weight, mean=0.0, std=0.02)
        nn.init.zeros_(self.out_proj.bias)
        if self.config.uses_edit:
            nn.init.normal_(self.ins_gap_emb, mean=0.0, std=0.02)
            nn.init.normal_(self.del_span_emb, mean=0.0, std=0.02)

    def _embed(self, ids: torch.Tensor) -> torch.Tensor:
        pos = self.pos_enc[: ids.shape[1]].to(self.embed.weight.dtype)
        scale = math.sqrt(self.config.d_model)
        return self.input_dropout(self.embed(ids) * scale + pos)

    def encode(self, src_ids: torch.Tensor, src_padding_mask: torch.Tensor | None = None) -> torch.Tensor:
        x = self._embed(src_ids)
        for layer in self.enc_layers:
            x = layer(x, src_padding_mask)
        return self.enc_norm(x)

    def decode(
        self,
        tgt_in_ids: torch.Tensor,
        enc: torch.Tensor,
        src_padding_mask: torch.Tensor | None = None,
        cross_bias: torch.Tensor | None = None,
        need_weights: bool = False,
    ) -> tuple[torch.Tensor, list[torch.Tensor]]:
        """Logits (B, T, V) for each prefix position, plus, on request, the
        per-layer cross-attention weights."""
        x = self._embed(tgt_in_ids)
        all_weights: list[torch.Tensor] = []
        for layer in self.dec_layers:
            x, weights = layer(
                x, enc, src_padding_mask, cross_bias=cross_bias, need_weights=need_weights
            )
            if need_weights:
                all_weights.append(weights)
        return self.out_proj(self.dec_norm(x)), all_weights

    # ----- edit-pointer machinery -------------------------------------------

    def pointer_logits(
        self, enc: torch.Tensor, pointer_base: torch.Tensor, n_gaps: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """(insert, delete) logits over gap positions, padded with -inf.

        Gap g of example b reads the encoder state at ``pointer_base[b]+g``;
        gaps at or beyond ``n_gaps[b]`` are masked.
        """
        if not self.config.uses_edit:
            raise RuntimeError(f"variant {self.config.variant!r} has no pointer heads")
        bsz, length, _ = enc.shape
        max_gaps = int(n_gaps.max().item())
        gap_range = torch.arange(max_gaps, device=enc.device)
        positions = (pointer_base[:, None] + gap_range[None, :]).clamp(0, length - 1)
        valid = gap_range[None, :] < n_gaps[:, None]
        states = enc[torch.arange(bsz, device=enc.device)[:, None], positions]
        ins = self.ins_head(states).squeeze(-1).masked_fill(~valid, NEG_INF)
        dele = self.del_head(states).squeeze(-1).masked_fill(~valid, NEG_INF)
        return ins, dele

    def condition_on_pointers(
        self,
        enc: torch.Tensor,
        pointer_base: torch.Tensor,
        bug_start: torch.Tensor,
        insert_ptrs: torch.Tensor,
        delete_ptrs: torch.Tensor,
    ) -> torch.Tensor:
        """Mark a pointer choice on the encoder output: the insertion-gap
        state receives one learned vector, every state in the deleted span
        the other. Built from constant masks so gradients reach both
        vectors."""
        bsz, length, _ = enc.shape
        ins_mask = torch.zeros(bsz, length, dtype=enc.dtype, device=enc.device)
        del_mask = torch.zeros(bsz, length, dtype=enc.dtype, device=enc.device)
        for b in range(bsz):
            i = int(insert_ptrs[b])
            j = int(delete_ptrs[b])
            ins_mask[b, int(pointer_base[b]) + i] = 1.0
            if j > i:
                start = int(bug_start[b])
                del_mask[b, start + i : start + j] = 1.0
        return (
            enc
            + ins_mask[:, :, None] * self.ins_gap_emb
            + del_mask[:, :, None] * self.del_span_emb
        )

    # ----- context-bias machinery --------------------------------------------

    def cross_bias(
        self,
        span_mask: torch.Tensor,
        scale: float | torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Additive cross-attention logit bias from a (B, S) bug-span mask.

        ``scale`` overrides the learned scalar (used by sanity checks);
        raises if the mask marks no position at all.
        """
        if not self.config.uses_context:
            raise RuntimeError(f"variant {self.config.variant!r} has no context bias")
        if not bool(span_mask.any()):
            raise ValueError("bug span is empty")
        bias = self.attn_bias if scale is None else torch.as_tensor(
            scale, dtype=span_mask.dtype
        )
        return (span_mask * bias)[:, None, None, :]


def build_model(config: ModelConfig, vocab_size: int) -> RepairTransformer:
    """Seeded construction: same config and seed give bitwise-equal weights."""
    torch.manual_seed(config.seed)
    model = RepairTransformer(config, vocab_size)
    dtype = torch.float64 if config.dtype == "float64" else torch.float32
    return model.to(dtype)
