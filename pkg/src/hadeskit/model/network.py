"""Full detector network and the ablation wirings."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import torch
from torch import nn

from ..exceptions import ConfigError
from .fusion import ConcatFusion, CrossModalFusion, DetectionHead, SelfFusion, build_global
from .log_encoder import LogEncoder
from .metric_encoder import MetricEncoder

VARIANTS = ("full", "woM", "woL", "woF", "woA", "woC", "woH", "woS")


@dataclass(frozen=True)
class ArchConfig:
    embed_dim: int = 32
    d_model: int = 32
    n_heads: int = 4
    d_ff: int = 64
    n_layers: int = 2
    out_dim: int = 32
    intra_channels: tuple = (16, 16)
    inter_channels: tuple = (32, 32)
    kernel_size: int = 3
    head_hidden: tuple = (64, 64, 64)
    L_max: int = 64

    def __post_init__(self):
        for name in ("embed_dim", "d_model", "n_heads", "d_ff", "n_layers", "out_dim", "kernel_size", "L_max"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.d_model % self.n_heads:
            raise ConfigError("d_model must be divisible by n_heads")
        object.__setattr__(self, "intra_channels", tuple(self.intra_channels))
        object.__setattr__(self, "inter_channels", tuple(self.inter_channels))
        object.__setattr__(self, "head_hidden", tuple(self.head_hidden))

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


# Widths and depths reported for the original system; kernels, intra width and
# head count are not reported and use the desk defaults' conventions.
PRESETS = {
    "desk": ArchConfig(),
    "paper-arch": ArchConfig(
        embed_dim=32, d_model=1024, n_heads=8, d_ff=1024, n_layers=2, out_dim=256,
        intra_channels=(64, 64), inter_channels=(256, 256), head_hidden=(512, 512, 512), L_max=128,
    ),
    "paper-impl": ArchConfig(
        embed_dim=32, d_model=1024, n_heads=8, d_ff=1024, n_layers=4, out_dim=256,
        intra_channels=(64, 64), inter_channels=(256, 256), head_hidden=(512, 512, 512), L_max=128,
    ),
}


def arch_preset(name: str, **overrides) -> ArchConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown architecture preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides) if overrides else PRESETS[name]


@dataclass(frozen=True)
class Wiring:
    use_logs: bool = True
    use_metrics: bool = True
    fusion: Optional[str] = "cross"  # cross | concat | self | None
    hierarchical: bool = True
    semantic: bool = True
    or_combine: bool = False


def ablation_config(variant: str) -> Wiring:
    """Model wiring for the full detector and each derived ablation."""
    table = {
        "full": Wiring(),
        "woM": Wiring(use_metrics=False, fusion=None),
        "woL": Wiring(use_logs=False, fusion=None),
        "woF": Wiring(fusion=None, or_combine=True),
        "woA": Wiring(fusion="concat"),
        "woC": Wiring(fusion="self"),
        "woH": Wiring(hierarchical=False),
        "woS": Wiring(semantic=False),
    }
    if variant not in table:
        raise ConfigError(f"unknown variant {variant!r}; choose from {list(VARIANTS)}")
    return table[variant]


class HadesNet(nn.Module):
    """Logs ``(B, L, E)`` + mask ``(B, L)`` + metrics ``(B, T, M)`` -> two logits per chunk.

    Single-modality wirings ignore the missing input (it may be ``None``).
    """

    def __init__(self, arch: ArchConfig, wiring: Wiring, log_in_dim: int, groups: Sequence[Sequence[int]]):
        super().__init__()
        if wiring.or_combine:
            raise ConfigError("the OR-combined ablation is two networks; build woM and woL separately")
        self.arch = arch
        self.wiring = wiring
        D = arch.out_dim
        self.log_encoder = (
            LogEncoder(log_in_dim, arch.d_model, D, arch.n_layers, arch.n_heads, arch.d_ff, max_len=max(arch.L_max, 1))
            if wiring.use_logs
            else None
        )
        self.metric_encoder = (
            MetricEncoder(groups, D, arch.intra_channels, arch.inter_channels, arch.kernel_size, wiring.hierarchical)
            if wiring.use_metrics
            else None
        )
        fusions = {"cross": CrossModalFusion, "self": SelfFusion}
        if wiring.fusion in fusions:
            self.fusion = fusions[wiring.fusion](D)
        elif wiring.fusion == "concat":
            self.fusion = ConcatFusion()
        else:
            self.fusion = None
        self.head = DetectionHead(D, arch.head_hidden)

    def representations(self, logs=None, log_mask=None, metrics=None) -> dict:
        reps = {}
        if self.log_encoder is not None:
            reps["R_l"] = self.log_encoder(logs, log_mask)
        if self.metric_encoder is not None:
            reps["H_m"], reps["R_m"] = self.metric_encoder(metrics)
        if self.fusion is not None:
            reps["R_g"] = build_global(reps["R_l"], reps["R_m"], log_mask, self.fusion)
        else:
            reps["R_g"] = reps["R_l"] if self.log_encoder is not None else reps["R_m"]
        return reps

    def forward(self, logs=None, log_mask=None, metrics=None):
        return self.head(self.representations(logs, log_mask, metrics)["R_g"])
