"""Hierarchical causal-convolution metric encoder (per-aspect, then across aspects)."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..exceptions import ConfigError, MissingColumn, ShapeError, UnmappedMetric


@dataclass(frozen=True)
class AspectMap:
    """Ordered assignment of metric names to aspects."""

    aspects: tuple  # ((aspect_name, (metric, ...)), ...)

    def __post_init__(self):
        names = [a for a, _ in self.aspects]
        if len(set(names)) != len(names):
            raise ConfigError("aspect names must be unique")
        seen = set()
        for aspect, metrics in self.aspects:
            if not metrics:
                raise ConfigError(f"aspect {aspect!r} has no metrics")
            for m in metrics:
                if m in seen:
                    raise ConfigError(f"metric {m!r} is assigned to more than one aspect")
                seen.add(m)

    @classmethod
    def from_dict(cls, mapping: dict) -> "AspectMap":
        return cls(tuple((str(a), tuple(ms)) for a, ms in mapping.items()))

    @classmethod
    def single(cls, metric_names: Sequence[str], name: str = "all") -> "AspectMap":
        return cls(((name, tuple(metric_names)),))

    @classmethod
    def from_json(cls, text: str) -> "AspectMap":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {a: list(ms) for a, ms in self.aspects}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @property
    def names(self) -> list:
        return [a for a, _ in self.aspects]

    @property
    def metrics(self) -> list:
        return [m for _, ms in self.aspects for m in ms]

    def __len__(self):
        return len(self.aspects)

    def column_indices(self, metric_names: Sequence[str]) -> list:
        """Per aspect, the positions of its metrics within ``metric_names``."""
        index = {n: i for i, n in enumerate(metric_names)}
        mapped = set(self.metrics)
        for n in metric_names:
            if n not in mapped:
                raise UnmappedMetric(n)
        groups = []
        for _, ms in self.aspects:
            missing = [m for m in ms if m not in index]
            if missing:
                raise MissingColumn(missing[0])
            groups.append([index[m] for m in ms])
        return groups


def group_by_aspect(segment, metric_names: Sequence[str], aspect_map: AspectMap) -> list:
    """Split a ``T x M`` segment into one ``T x m_a`` block per aspect."""
    segment = np.asarray(segment)
    if segment.ndim != 2 or segment.shape[1] != len(metric_names):
        raise ShapeError(f"segment shape {segment.shape} does not match {len(metric_names)} metric names")
    return [segment[:, cols] for cols in aspect_map.column_indices(metric_names)]


class CausalConv1d(nn.Module):
    """Conv1d padded on the left by ``(k - 1) * dilation`` so output t sees inputs <= t."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 3, dilation: int = 1):
        super().__init__()
        self.pad = (kernel_size - 1) * dilation
        self.conv = nn.Conv1d(in_channels, out_channels, kernel_size, dilation=dilation)

    def forward(self, x):
        return self.conv(F.pad(x, (self.pad, 0)))


class CausalConvStack(nn.Module):
    """Causal convolutions with ReLU between layers; dilation doubles per layer.

    Operates on ``(B, T, C)`` tensors and preserves ``T``.
    """

    def __init__(self, channels: Sequence[int], kernel_size: int = 3):
        super().__init__()
        if len(channels) < 2:
            raise ConfigError("a conv stack needs input and output channel counts")
        self.in_channels = channels[0]
        self.out_channels = channels[-1]
        self.layers = nn.ModuleList(
            CausalConv1d(c_in, c_out, kernel_size, dilation=2**i)
            for i, (c_in, c_out) in enumerate(zip(channels[:-1], channels[1:]))
        )

    @property
    def receptive_field(self) -> int:
        return 1 + sum(layer.pad for layer in self.layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 3 or x.shape[-1] != self.in_channels:
            raise ShapeError(f"expected (B, T, {self.in_channels}) input, got {tuple(x.shape)}")
        h = x.transpose(1, 2)
        for i, layer in enumerate(self.layers):
            if i:
                h = torch.relu(h)
            h = layer(h)
        return h.transpose(1, 2)


def encode_intra(stack: CausalConvStack, block: torch.Tensor) -> torch.Tensor:
    """Aspect block ``(B, T, m_a)`` -> ``(B, T, 1)``: conv stack then max over channels."""
    return stack(block).max(dim=-1, keepdim=True).values


def encode_inter(stack: CausalConvStack, h: torch.Tensor) -> torch.Tensor:
    return stack(h)


class MetricEncoder(nn.Module):
    """Metric segment ``(B, T, M)`` -> ``(H^m (B, T, gamma), R^m (B, T, D))``.

    ``hierarchical=False`` replaces the per-aspect encoders with one stack over
    all metrics feeding the output directly (aspect-agnostic ablation).
    """

    def __init__(
        self,
        groups: Sequence[Sequence[int]],
        out_dim: int,
        intra_channels: Sequence[int] = (16, 16),
        inter_channels: Sequence[int] = (32, 32),
        kernel_size: int = 3,
        hierarchical: bool = True,
    ):
        super().__init__()
        self.groups = [list(g) for g in groups]
        self.n_metrics = sum(len(g) for g in groups)
        self.hierarchical = hierarchical
        for i, g in enumerate(self.groups):
            self.register_buffer(f"group{i}", torch.tensor(g, dtype=torch.long), persistent=False)
        if hierarchical:
            self.intra = nn.ModuleList(CausalConvStack([len(g), *intra_channels], kernel_size) for g in self.groups)
            self.inter = CausalConvStack([len(self.groups), *inter_channels, out_dim], kernel_size)
        else:
            self.intra = nn.ModuleList()
            self.inter = CausalConvStack([self.n_metrics, *intra_channels, *inter_channels, out_dim], kernel_size)

    def forward(self, x: torch.Tensor):
        if x.dim() != 3 or x.shape[-1] != self.n_metrics:
            raise ShapeError(f"expected (B, T, {self.n_metrics}) metrics, got {tuple(x.shape)}")
        if not self.hierarchical:
            return None, self.inter(x)
        pooled = [encode_intra(stack, x.index_select(-1, getattr(self, f"group{i}"))) for i, stack in enumerate(self.intra)]
        h = torch.cat(pooled, dim=-1)
        return h, encode_inter(self.inter, h)
