"""Transformer encoder over a chunk's event vectors, producing the log representation."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import torch
from torch import nn

from ..exceptions import ShapeError


def pad_or_truncate(embeddings, L_max: int):
    """Fit an event-vector sequence to ``L_max`` rows.

    Long sequences keep their last ``L_max`` events; short ones are zero-padded
    at the tail. Returns the ``L_max x E`` matrix and a boolean mask of real rows.
    """
    if L_max < 1:
        raise ShapeError(f"L_max must be >= 1, got {L_max}")
    emb = np.asarray(embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise ShapeError(f"expected an (n, E) matrix, got shape {emb.shape}")
    emb = emb[-L_max:] if len(emb) > L_max else emb
    out = np.zeros((L_max, emb.shape[1]))
    out[: len(emb)] = emb
    mask = np.zeros(L_max, dtype=bool)
    mask[: len(emb)] = True
    return out, mask


def sinusoidal_positions(length: int, d_model: int) -> torch.Tensor:
    pos = torch.arange(length, dtype=torch.float64)[:, None]
    i = torch.arange(0, d_model, 2, dtype=torch.float64)
    angle = pos / torch.pow(torch.tensor(10000.0, dtype=torch.float64), i / d_model)
    table = torch.zeros(length, d_model, dtype=torch.float64)
    table[:, 0::2] = torch.sin(angle)
    table[:, 1::2] = torch.cos(angle[:, : d_model // 2])
    return table


def masked_softmax(scores: torch.Tensor, key_mask: torch.Tensor) -> torch.Tensor:
    """Softmax over the last axis restricted to ``key_mask``; rows with no valid key become zero."""
    scores = scores.masked_fill(~key_mask, float("-inf"))
    any_valid = key_mask.any(dim=-1, keepdim=True)
    scores = torch.where(any_valid, scores, torch.zeros_like(scores))
    return torch.softmax(scores, dim=-1) * any_valid


class SelfAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        if d_model % n_heads:
            raise ShapeError(f"d_model={d_model} is not divisible by n_heads={n_heads}")
        self.n_heads = n_heads
        self.qkv = nn.Linear(d_model, 3 * d_model)
        self.out = nn.Linear(d_model, d_model)
        self.last_attention = None

    def forward(self, x, mask):
        B, L, d = x.shape
        h = self.n_heads
        q, k, v = self.qkv(x).view(B, L, 3, h, d // h).permute(2, 0, 3, 1, 4)
        scores = q @ k.transpose(-1, -2) / math.sqrt(d // h)
        attn = masked_softmax(scores, mask[:, None, None, :])
        self.last_attention = attn.detach()
        ctx = (attn @ v).transpose(1, 2).reshape(B, L, d)
        return self.out(ctx)


class EncoderLayer(nn.Module):
    """Post-norm Transformer encoder layer."""

    def __init__(self, d_model: int, n_heads: int, d_ff: int):
        super().__init__()
        self.attn = SelfAttention(d_model, n_heads)
        self.norm1 = nn.LayerNorm(d_model)
        self.ff = nn.Sequential(nn.Linear(d_model, d_ff), nn.ReLU(), nn.Linear(d_ff, d_model))
        self.norm2 = nn.LayerNorm(d_model)

    def forward(self, x, mask):
        x = self.norm1(x + self.attn(x, mask))
        return self.norm2(x + self.ff(x))


class LogEncoder(nn.Module):
    """Event vectors ``(B, L, E)`` -> log representation ``(B, L, D)``.

    Input projection plus sinusoidal positions, ``n_layers`` encoder layers with
    self-attention restricted to real events, then an output projection. Padded
    rows of the result are exactly zero.
    """

    def __init__(self, in_dim: int, d_model: int, out_dim: int, n_layers: int = 2, n_heads: int = 4, d_ff: int = 128, max_len: int = 512):
        super().__init__()
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.in_proj = nn.Linear(in_dim, d_model)
        self.layers = nn.ModuleList(EncoderLayer(d_model, n_heads, d_ff) for _ in range(n_layers))
        self.out_proj = nn.Linear(d_model, out_dim)
        self.register_buffer("positions", sinusoidal_positions(max_len, d_model), persistent=False)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        if x.dim() != 3 or x.shape[-1] != self.in_dim or mask.shape != x.shape[:2]:
            raise ShapeError(f"log input {tuple(x.shape)} / mask {tuple(mask.shape)} do not fit in_dim={self.in_dim}")
        if x.shape[1] > self.positions.shape[0]:
            raise ShapeError(f"sequence length {x.shape[1]} exceeds max_len {self.positions.shape[0]}")
        h = self.in_proj(x) + self.positions[: x.shape[1]].to(x.dtype)
        for layer in self.layers:
            h = layer(h, mask)
        return self.out_proj(h) * mask[..., None].to(x.dtype)

    def attention_maps(self) -> list:
        return [layer.attn.last_attention for layer in self.layers]
