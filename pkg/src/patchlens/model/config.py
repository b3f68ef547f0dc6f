"""Model configuration shared by all variants."""

from __future__ import annotations

from dataclasses import dataclass, asdict

VARIANTS = ("baseline", "edit", "baseline+context", "edit+context")


@dataclass(frozen=True)
class ModelConfig:
    """Desk-scale defaults; everything is overridable from the CLI config.

    ``context_budget`` caps the number of context subtokens added around the
    buggy line for the +context variants and is ignored otherwise.
    ``overlength`` selects what happens when a sequence still exceeds the
    max lengths after context trimming: "truncate" (flagged) or "reject".
    """

    variant: str = "baseline"
    d_model: int = 128
    n_heads: int = 4
    n_enc_layers: int = 2
    n_dec_layers: int = 2
    ff_dim: int = 512
    dropout: float = 0.1
    max_src_len: int = 768
    max_tgt_len: int = 64
    context_budget: int = 500
    seed: int = 0
    dtype: str = "float64"
    overlength: str = "truncate"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.d_model % self.n_heads != 0:
            raise ValueError(
                f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})"
            )
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.overlength not in ("truncate", "reject"):
            raise ValueError(f"overlength must be truncate or reject, got {self.overlength!r}")
        for name in ("d_model", "n_heads", "n_enc_layers", "n_dec_layers", "ff_dim",
                     "max_src_len", "max_tgt_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def uses_edit(self) -> bool:
        return self.variant.startswith("edit")

    @property
    def uses_context(self) -> bool:
        return self.variant.endswith("+context")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)
