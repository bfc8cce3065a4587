"""The masked-prediction encoder over compositional code sequences.

Each of the M subspaces owns an embedding table of k_star + 1 entries
(the extra id is the reserved mask token). Sub-embeddings concatenate to
D_model, gain positional encodings, and pass through pre-norm encoder
layers. M linear heads predict the original id of each subspace.
"""

import math

import numpy as np
import torch
from torch import nn

from .config import PqBertConfig
from .errors import AllRowsInvalid, EmptyMaskPlan, IdOutOfRange
from .masking import MaskPlan, corrupt


def sinusoidal_encoding(length: int, dim: int) -> torch.Tensor:
    position = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, dim, 2, dtype=torch.float64) * (-math.log(10000.0) / dim)
    )
    pe = torch.zeros(length, dim, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(position * div)
    pe[:, 1::2] = torch.cos(position * div[: dim // 2])
    return pe.to(torch.get_default_dtype())


class EncoderLayer(nn.Module):
    """Pre-norm block. bypass_attention skips the mixing step so tests
    can verify that everything else acts position-locally."""

    def __init__(self, d_model: int, heads: int, ff_dim: int, dropout: float):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.attn = nn.MultiheadAttention(d_model, heads, dropout=dropout,
                                          batch_first=True)
        self.norm2 = nn.LayerNorm(d_model)
        self.ff = nn.Sequential(
            nn.Linear(d_model, ff_dim),
            nn.GELU(),
            nn.Dropout(dropout),
            nn.Linear(ff_dim, d_model),
        )
        self.drop = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor, bypass_attention: bool = False) -> torch.Tensor:
        if not bypass_attention:
            h = self.norm1(x)
            mixed, _ = self.attn(h, h, h, need_weights=False)
            x = x + self.drop(mixed)
        return x + self.drop(self.ff(self.norm2(x)))


class PqBert(nn.Module):
    def __init__(self, cfg: PqBertConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        self.mask_id = cfg.mask_id
        self.sub_embeddings = nn.ModuleList(
            nn.Embedding(cfg.k_star + 1, cfg.sub_dim) for _ in range(cfg.M)
        )
        if cfg.positional == "learned":
            self.pos_embedding = nn.Embedding(cfg.P, cfg.D_model)
        else:
            self.register_buffer(
                "pos_table", sinusoidal_encoding(cfg.P, cfg.D_model)
            )
        self.layers = nn.ModuleList(
            EncoderLayer(cfg.D_model, cfg.heads, cfg.ff_dim, cfg.dropout)
            for _ in range(cfg.layers)
        )
        self.final_norm = nn.LayerNorm(cfg.D_model)
        self.heads = nn.ModuleList(
            nn.Linear(cfg.D_model, cfg.k_star) for _ in range(cfg.M)
        )

    def _as_tensor(self, codes) -> torch.Tensor:
        if isinstance(codes, np.ndarray):
            codes = torch.from_numpy(np.ascontiguousarray(codes))
        codes = codes.long()
        if codes.ndim == 2:
            codes = codes.unsqueeze(0)
        if codes.ndim != 3 or codes.shape[-1] != self.cfg.M:
            raise IdOutOfRange(
                f"expected (batch, P, {self.cfg.M}) ids, got {tuple(codes.shape)}"
            )
        if codes.numel() and (codes.min() < 0 or codes.max() > self.mask_id):
            raise IdOutOfRange(
                f"ids must lie in [0, {self.mask_id}] (mask id included)"
            )
        return codes

    def encode(self, codes, bypass_attention: bool = False) -> torch.Tensor:
        """Contextual states, shape (batch, P, D_model); a bare (P, M)
        input returns (P, D_model)."""
        raw_ndim = codes.ndim if hasattr(codes, "ndim") else np.asarray(codes).ndim
        squeeze = raw_ndim == 2
        ids = self._as_tensor(codes)
        parts = [emb(ids[..., i]) for i, emb in enumerate(self.sub_embeddings)]
        x = torch.cat(parts, dim=-1)
        length = x.shape[1]
        if self.cfg.positional == "learned":
            pos = self.pos_embedding(torch.arange(length, device=x.device))
        else:
            pos = self.pos_table[:length]
        x = x + pos
        for layer in self.layers:
            x = layer(x, bypass_attention=bypass_attention)
        x = self.final_norm(x)
        return x.squeeze(0) if squeeze else x

    def head_logits(self, states: torch.Tensor) -> list[torch.Tensor]:
        return [head(states) for head in self.heads]


def mlm_loss_from_logits(
    logits: list[torch.Tensor],
    targets: torch.Tensor,
    selected: torch.Tensor,
) -> torch.Tensor:
    """Sum over heads of the mean cross entropy at that head's masked
    positions; heads with no masked positions contribute zero."""
    total = None
    nonempty = 0
    for i, lg in enumerate(logits):
        mask = selected[..., i]
        if bool(mask.any()):
            nonempty += 1
            term = nn.functional.cross_entropy(lg[mask], targets[..., i][mask])
        else:
            term = lg.sum() * 0.0
        total = term if total is None else total + term
    if nonempty == 0:
        raise EmptyMaskPlan("no masked positions in any head")
    return total


def mlm_loss(model: PqBert, codes: np.ndarray, plan: MaskPlan,
             bypass_attention: bool = False) -> torch.Tensor:
    """Multi-task masked-prediction loss for one (P, M) sequence."""
    corrupted = corrupt(codes, plan, model.mask_id)
    states = model.encode(corrupted[None, :, :], bypass_attention=bypass_attention)
    logits = model.head_logits(states)
    targets = torch.from_numpy(np.asarray(codes, dtype=np.int64))[None, :, :]
    selected = torch.from_numpy(plan.selected)[None, :, :]
    return mlm_loss_from_logits(logits, targets, selected)


def batch_mlm_loss(
    model: PqBert,
    codes_batch: np.ndarray,      # (B, P, M) original ids
    corrupted_batch: np.ndarray,  # (B, P, M) post-corruption ids
    selected_batch: np.ndarray,   # (B, P, M) bool
) -> torch.Tensor:
    states = model.encode(torch.from_numpy(corrupted_batch))
    logits = model.head_logits(states)
    targets = torch.from_numpy(np.asarray(codes_batch, dtype=np.int64))
    selected = torch.from_numpy(selected_batch)
    return mlm_loss_from_logits(logits, targets, selected)


def program_embedding(model: PqBert, codes: np.ndarray,
                      validity: np.ndarray | None = None) -> np.ndarray:
    """Pool encoder states over valid probe positions. Rows flagged
    invalid by the spectrum pipeline are excluded from the pool."""
    model.eval()
    with torch.no_grad():
        states = model.encode(np.asarray(codes))
    if validity is None:
        validity = np.ones(states.shape[0], dtype=bool)
    validity = np.asarray(validity, dtype=bool)
    if not validity.any():
        raise AllRowsInvalid("every probe row is flagged invalid")
    kept = states[torch.from_numpy(validity)]
    if model.cfg.pooling == "max":
        pooled = kept.max(dim=0).values
    else:
        pooled = kept.mean(dim=0)
    return pooled.cpu().numpy().astype(np.float64)
