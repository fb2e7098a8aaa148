"""Run configuration: TOML file plus dotted ``--section.key value`` overrides."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import tomli

from .exceptions import ConfigError
from .model.network import PRESETS, VARIANTS, ArchConfig, arch_preset
from .training import TrainConfig

DEFAULTS = {
    "seed": 0,
    "variant": "full",
    "paths": {"logs": "", "metrics": "", "aspects": "", "labels": "", "provenance": "", "out": ""},
    "chunking": {"T": 10, "stride": 0, "train_frac": 1.0},
    "arch": {"preset": "desk"},
    "train": {
        "lr": 1e-3, "batch_size": 128, "epochs_phase1": 50, "epochs_phase2": 50,
        "mix_weight": 0.5, "confidence_threshold": 0.95, "semi_supervised": True,
        "embed_epochs": 20, "embed_window": 5,
    },
    "select": {"workloads": [], "faults": []},
}
_ARCH_KEYS = set(ArchConfig.__dataclass_fields__)


def _merge(base: dict, extra: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        key = f"{where}{k}"
        if k not in out and not (where == "arch." and k in _ARCH_KEYS):
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(out.get(k), dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {key!r} must be a table")
            out[k] = _merge(out[k], v, key + ".")
        else:
            out[k] = v
    return out


def parse_value(text: str):
    """Interpret an override value as a TOML literal, falling back to a bare string."""
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def apply_override(tree: dict, dotted: str, value) -> dict:
    parts = dotted.split(".")
    nested = value
    for p in reversed(parts):
        nested = {p: nested}
    return _merge(tree, nested)


@dataclass
class RunConfig:
    tree: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: tuple = ()) -> "RunConfig":
        tree = copy.deepcopy(DEFAULTS)
        if path:
            try:
                with open(path, "rb") as fh:
                    tree = _merge(tree, tomli.load(fh))
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except tomli.TOMLDecodeError as exc:
                raise ConfigError(f"bad TOML in {path}: {exc}") from exc
        for dotted, value in overrides:
            tree = apply_override(tree, dotted, value)
        cfg = cls(tree)
        cfg.validate()
        return cfg

    def __getitem__(self, dotted: str):
        node = self.tree
        for p in dotted.split("."):
            node = node[p]
        return node

    @property
    def seed(self) -> int:
        return int(self.tree["seed"])

    @property
    def variant(self) -> str:
        return self.tree["variant"]

    @property
    def T(self) -> int:
        return int(self.tree["chunking"]["T"])

    @property
    def stride(self) -> Optional[int]:
        return int(self.tree["chunking"]["stride"]) or None

    def arch(self) -> ArchConfig:
        spec = dict(self.tree["arch"])
        preset = spec.pop("preset")
        if preset not in PRESETS and preset != "custom":
            raise ConfigError(f"unknown architecture preset {preset!r}")
        base = "desk" if preset == "custom" else preset
        try:
            return arch_preset(base, **{k: tuple(v) if isinstance(v, list) else v for k, v in spec.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def train_config(self) -> TrainConfig:
        t = self.tree["train"]
        return TrainConfig(
            lr=t["lr"], batch_size=t["batch_size"], epochs_phase1=t["epochs_phase1"],
            epochs_phase2=t["epochs_phase2"], mix_weight=t["mix_weight"],
            confidence_threshold=t["confidence_threshold"], seed=self.seed,
        )

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.T < 1 or (self.stride is not None and self.stride < 1):
            raise ConfigError("chunking.T and chunking.stride must be positive")
        if not 0 < float(self.tree["chunking"]["train_frac"]) <= 1:
            raise ConfigError("chunking.train_frac must lie in (0, 1]")
        self.arch()
        self.train_config()

    def require_paths(self, *keys: str) -> dict:
        """Resolve the named paths, checking that each is set and exists."""
        out = {}
        for k in keys:
            p = self.tree["paths"].get(k, "")
            if not p:
                raise ConfigError(f"missing required path: paths.{k}")
            if k != "out" and not Path(p).exists():
                raise ConfigError(f"paths.{k} does not exist: {p}")
            out[k] = Path(p)
        return out
