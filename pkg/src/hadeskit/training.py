"""Two-phase semi-supervised training and the Rec/Pre/F1 evaluation harness."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import torch

from .exceptions import ConfigError, DegenerateLabels, EmptyBatch, EmptyTestSet, NumericalError
from .features import ChunkTensors
from .model.fusion import predictions_from_logits
from .validation import check_binary

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 128
    epochs_phase1: int = 50
    epochs_phase2: int = 50
    mix_weight: float = 0.5  # lambda
    confidence_threshold: float = 0.95  # tau
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1:
            raise ConfigError("lr and batch_size must be positive")
        if self.epochs_phase1 < 0 or self.epochs_phase2 < 0:
            raise ConfigError("epoch counts must be non-negative")
        if not 0 <= self.mix_weight <= 1:
            raise ConfigError(f"mix_weight must lie in [0, 1], got {self.mix_weight}")
        if not 0.5 < self.confidence_threshold <= 1:
            raise ConfigError(f"confidence_threshold must lie in (0.5, 1], got {self.confidence_threshold}")


@dataclass(frozen=True)
class LossReport:
    phase: int
    epoch: int
    L_plus: float
    L_minus: float
    L_total: float

    def to_dict(self) -> dict:
        return asdict(self)


def mixed_loss(L_plus, L_minus, mix_weight: float):
    return (1 - mix_weight) * L_plus + mix_weight * L_minus


def bce_loss(probabilities, labels):
    """Mean of ``-log p[label]`` with probabilities clamped to ``[1e-12, 1 - 1e-12]``.

    Accepts numpy arrays (returns a float) or torch tensors (returns a tensor).
    """
    if torch.is_tensor(probabilities):
        if probabilities.shape[0] == 0:
            raise EmptyBatch("bce_loss on an empty batch")
        p = probabilities.gather(1, labels.long()[:, None])[:, 0]
        return -torch.log(p.clamp(PROB_CLAMP, 1 - PROB_CLAMP)).mean()
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probabilities.shape[0] == 0:
        raise EmptyBatch("bce_loss on an empty batch")
    p = probabilities[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.clip(p, PROB_CLAMP, 1 - PROB_CLAMP))))


def _forward(net, data: ChunkTensors):
    return net(**data.inputs())


def _check_finite(value: float, phase: int, epoch: int):
    if not math.isfinite(value):
        raise NumericalError(f"non-finite loss in phase {phase}, epoch {epoch}")


class _BatchStream:
    """Endless mini-batches over ``n`` samples, reshuffled (seeded) after each pass."""

    def __init__(self, n: int, batch_size: int, seed: int):
        self.n = n
        self.batch_size = batch_size
        self.gen = torch.Generator().manual_seed(seed)
        self._perm = torch.empty(0, dtype=torch.long)
        self._pos = 0

    def next(self) -> torch.Tensor:
        if self._pos >= len(self._perm):
            self._perm = torch.randperm(self.n, generator=self.gen)
            self._pos = 0
        idx = self._perm[self._pos : self._pos + self.batch_size]
        self._pos += self.batch_size
        return idx


def train_loop(
    net,
    labeled: ChunkTensors,
    y_labeled,
    config: TrainConfig,
    epochs: int,
    phase: int,
    pseudo: Optional[ChunkTensors] = None,
    y_pseudo=None,
    mix_weight: float = 0.0,
    steps_per_epoch: Optional[int] = None,
    on_epoch: Optional[Callable[[LossReport], None]] = None,
) -> list:
    """Adam steps on ``(1 - mix) * L+ + mix * L-``; labeled and pseudo batches are drawn in lockstep.

    An epoch is one pass over the labeled set; the pseudo stream cycles
    independently, so ``mix_weight=0`` reproduces supervised training exactly.
    """
    y_labeled = torch.as_tensor(y_labeled, dtype=torch.long)
    has_pseudo = pseudo is not None and len(pseudo) > 0
    if has_pseudo:
        y_pseudo = torch.as_tensor(y_pseudo, dtype=torch.long)
    n_l = len(labeled)
    n_p = len(pseudo) if has_pseudo else 0
    B = config.batch_size
    if steps_per_epoch is None:
        steps_per_epoch = math.ceil(n_l / B)
    lab_stream = _BatchStream(n_l, B, config.seed * 1000 + 2 * phase)
    pse_stream = _BatchStream(max(n_p, 1), B, config.seed * 1000 + 2 * phase + 1)
    opt = torch.optim.Adam(net.parameters(), lr=config.lr, betas=(0.9, 0.999), eps=1e-8)
    trace = []
    net.train()
    for epoch in range(epochs):
        sums = np.zeros(3)
        for _ in range(steps_per_epoch):
            idx = lab_stream.next()
            probs = torch.softmax(_forward(net, labeled.subset(idx)), dim=-1)
            L_plus = bce_loss(probs, y_labeled[idx])
            if has_pseudo:
                pidx = pse_stream.next()
                L_minus = bce_loss(torch.softmax(_forward(net, pseudo.subset(pidx)), dim=-1), y_pseudo[pidx])
            else:
                L_minus = torch.zeros((), dtype=L_plus.dtype)
            loss = mixed_loss(L_plus, L_minus, mix_weight)
            _check_finite(loss.item(), phase, epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            sums += (L_plus.item(), L_minus.item(), loss.item())
        report = LossReport(phase, epoch, *(sums / max(steps_per_epoch, 1)))
        trace.append(report)
        if on_epoch:
            on_epoch(report)
    net.eval()
    return trace


def phase1_train(net, labeled: ChunkTensors, y_labeled, config: TrainConfig, on_epoch=None) -> list:
    """Supervised warm-up on the human-labeled chunks (minimizes L+)."""
    y = check_binary(y_labeled)
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("the labeled set must contain both normal and abnormal chunks")
    return train_loop(net, labeled, y, config, config.epochs_phase1, phase=1, on_epoch=on_epoch)


@torch.no_grad()
def predict_logits(net, data: ChunkTensors, batch_size: int = 512) -> torch.Tensor:
    net.eval()
    if len(data) == 0:
        return torch.zeros((0, 2))
    outs = [_forward(net, data.subset(torch.arange(i, min(i + batch_size, len(data))))) for i in range(0, len(data), batch_size)]
    return torch.cat(outs)


def pseudo_label(net, unlabeled: ChunkTensors, threshold: float):
    """Predict unlabeled chunks; keep those whose max class probability is >= ``threshold``.

    Returns ``(kept_indices, pseudo_labels, predictions)``.
    """
    preds = predictions_from_logits(predict_logits(net, unlabeled)) if len(unlabeled) else []
    kept = np.array([i for i, p in enumerate(preds) if p.confidence >= threshold], dtype=np.int64)
    labels = np.array([preds[i].label for i in kept], dtype=np.int64)
    return kept, labels, preds


def phase2_train(net, labeled: ChunkTensors, y_labeled, pseudo: Optional[ChunkTensors], y_pseudo, config: TrainConfig, on_epoch=None) -> list:
    """Mixed-loss training over labeled and (frozen) pseudo-labeled chunks."""
    y = check_binary(y_labeled)
    if pseudo is None or len(pseudo) == 0:
        warnings.warn("no pseudo-labeled chunks; phase 2 reduces to supervised training", RuntimeWarning, stacklevel=2)
        pseudo, y_pseudo = None, None
    return train_loop(
        net, labeled, y, config, config.epochs_phase2, phase=2,
        pseudo=pseudo, y_pseudo=y_pseudo, mix_weight=config.mix_weight, on_epoch=on_epoch,
    )


@dataclass(frozen=True)
class EvalReport:
    TP: int
    FP: int
    FN: int
    TN: int
    Rec: float
    Pre: float
    F1: float
    fp_windows: tuple = field(default=(), compare=False)
    fn_windows: tuple = field(default=(), compare=False)

    def to_dict(self, with_windows: bool = False) -> dict:
        d = {k: getattr(self, k) for k in ("TP", "FP", "FN", "TN", "Rec", "Pre", "F1")}
        if with_windows:
            d["fp_windows"] = list(self.fp_windows)
            d["fn_windows"] = list(self.fn_windows)
        return d


def evaluate_predictions(y_true, y_pred, windows: Optional[Sequence[int]] = None) -> EvalReport:
    """Confusion counts and Rec/Pre/F1.

    Zero denominators: Pre = 1 when nothing is flagged, Rec = 1 when nothing is
    abnormal, F1 = 1 only when both FP and FN are zero.
    """
    y_true = check_binary(y_true, "y_true")
    y_pred = check_binary(y_pred, "y_pred")
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred differ in length")
    if len(y_true) == 0:
        raise EmptyTestSet("no test chunks")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    rec = tp / (tp + fn) if tp + fn else 1.0
    pre = tp / (tp + fp) if tp + fp else 1.0
    f1 = 2 * tp / (2 * tp + fn + fp) if 2 * tp + fn + fp else 1.0
    fpw = fnw = ()
    if windows is not None:
        w = np.asarray(windows)
        fpw = tuple(int(x) for x in w[(y_true == 0) & (y_pred == 1)])
        fnw = tuple(int(x) for x in w[(y_true == 1) & (y_pred == 0)])
    return EvalReport(tp, fp, fn, tn, rec, pre, f1, fpw, fnw)


def evaluate(model, test: Sequence) -> EvalReport:
    """Score a fitted detector on human-labeled test chunks."""
    test = list(test)
    if not test:
        raise EmptyTestSet("no test chunks")
    if any(c.label is None for c in test):
        raise ValueError("every test chunk needs a human label")
    y_true = [c.label for c in test]
    return evaluate_predictions(y_true, model.predict(test), [c.window_start for c in test])
