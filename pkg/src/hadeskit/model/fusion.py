"""Cross-modal attentive fusion and the classification head."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch
from torch import nn

from ..exceptions import NumericalError, ShapeError
from .log_encoder import masked_softmax


def fuse(Q, K, V, W_s, W_a, key_mask=None, return_attention=False):
    """``tanh([softmax(Q W_s K^T) V ; Q] W_a)``.

    Shapes: ``Q (B, n, D)``, ``K, V (B, m, D)``, ``W_s (D, D)``, ``W_a (2D, D)``.
    Masked keys get zero weight; a query with no valid key attends to zeros.
    """
    if Q.dim() != 3 or K.dim() != 3 or V.dim() != 3:
        raise ShapeError("fuse expects batched (B, rows, D) tensors")
    D = Q.shape[-1]
    if K.shape[:2] != V.shape[:2] or K.shape[-1] != D or V.shape[-1] != D or K.shape[0] != Q.shape[0]:
        raise ShapeError(f"incompatible Q {tuple(Q.shape)}, K {tuple(K.shape)}, V {tuple(V.shape)}")
    if W_s.shape != (D, D) or W_a.shape != (2 * D, D):
        raise ShapeError(f"W_s {tuple(W_s.shape)} / W_a {tuple(W_a.shape)} do not match D={D}")
    if key_mask is None:
        key_mask = torch.ones(K.shape[:2], dtype=torch.bool, device=K.device)
    scores = Q @ W_s @ K.transpose(-1, -2)
    attn = masked_softmax(scores, key_mask[:, None, :])
    out = torch.tanh(torch.cat([attn @ V, Q], dim=-1) @ W_a)
    return (out, attn) if return_attention else out


class FuseLayer(nn.Module):
    """One directed attention (Query from one modality, Key/Value from the other)."""

    def __init__(self, dim: int):
        super().__init__()
        self.W_s = nn.Parameter(torch.empty(dim, dim))
        self.W_a = nn.Parameter(torch.empty(2 * dim, dim))
        nn.init.xavier_uniform_(self.W_s)
        nn.init.xavier_uniform_(self.W_a)
        self.last_attention = None

    def forward(self, Q, K, V, key_mask=None, query_mask=None):
        out, attn = fuse(Q, K, V, self.W_s, self.W_a, key_mask, return_attention=True)
        self.last_attention = attn.detach()
        if query_mask is not None:
            out = out * query_mask[..., None].to(out.dtype)
        return out


class CrossModalFusion(nn.Module):
    """Global representation: metric rows attending to logs, then log rows attending to metrics.

    Output rows are ``[Fuse(R^m, R^l, R^l) ; Fuse(R^l, R^m, R^m)]``, i.e. ``T + L``
    rows; padded log rows are zero.
    """

    def __init__(self, dim: int):
        super().__init__()
        self.alpha = FuseLayer(dim)  # logs query metrics
        self.beta = FuseLayer(dim)  # metrics query logs

    def forward(self, R_l, R_m, log_mask):
        attn_alpha = self.alpha(R_l, R_m, R_m, query_mask=log_mask)
        attn_beta = self.beta(R_m, R_l, R_l, key_mask=log_mask)
        return torch.cat([attn_beta, attn_alpha], dim=1)


class SelfFusion(nn.Module):
    """Ablation: each modality attends to itself, results concatenated by rows."""

    def __init__(self, dim: int):
        super().__init__()
        self.logs = FuseLayer(dim)
        self.metrics = FuseLayer(dim)

    def forward(self, R_l, R_m, log_mask):
        s_m = self.metrics(R_m, R_m, R_m)
        s_l = self.logs(R_l, R_l, R_l, key_mask=log_mask, query_mask=log_mask)
        return torch.cat([s_m, s_l], dim=1)


class ConcatFusion(nn.Module):
    """Ablation: plain row concatenation ``[R^m ; R^l]``."""

    def forward(self, R_l, R_m, log_mask):
        return torch.cat([R_m, R_l * log_mask[..., None].to(R_l.dtype)], dim=1)


def build_global(R_l, R_m, log_mask, fusion: nn.Module):
    if R_l.shape[-1] != R_m.shape[-1] or R_l.shape[0] != R_m.shape[0]:
        raise ShapeError(f"R^l {tuple(R_l.shape)} and R^m {tuple(R_m.shape)} disagree")
    return fusion(R_l, R_m, log_mask)


class DetectionHead(nn.Module):
    """Mean over rows, stacked FC + ReLU layers, two output logits."""

    def __init__(self, dim: int, hidden: Sequence[int] = (64, 64)):
        super().__init__()
        layers = []
        width = dim
        for h in hidden:
            layers += [nn.Linear(width, h), nn.ReLU()]
            width = h
        layers.append(nn.Linear(width, 2))
        self.net = nn.Sequential(*layers)

    def forward(self, R_g: torch.Tensor) -> torch.Tensor:
        return self.net(R_g.mean(dim=1))


@dataclass(frozen=True)
class Prediction:
    label: int
    probabilities: tuple
    confidence: float


def predictions_from_logits(logits) -> list:
    """Softmax over two logits per row; exact ties go to class 0."""
    logits = np.asarray(logits.detach().cpu().numpy() if torch.is_tensor(logits) else logits, dtype=np.float64)
    if logits.ndim == 1:
        logits = logits[None]
    if not np.isfinite(logits).all():
        raise NumericalError("non-finite logits")
    z = logits - logits.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    out = []
    for row_logits, row in zip(logits, p):
        label = int(row_logits[1] > row_logits[0])
        out.append(Prediction(label, (float(row[0]), float(row[1])), float(row.max())))
    return out


def classify(head: DetectionHead, R_g: torch.Tensor) -> list:
    if not torch.isfinite(R_g).all():
        raise NumericalError("global representation has non-finite entries")
    with torch.no_grad():
        return predictions_from_logits(head(R_g))
