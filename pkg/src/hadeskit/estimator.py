"""Scikit-learn style detector: ``fit`` on chunks (-1 = unlabeled), ``predict`` per chunk."""
from __future__ import annotations

import logging
from typing import Optional, Sequence

import numpy as np
import torch
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError, DegenerateLabels
from .features import ChunkFeaturizer, ChunkTensors
from .model.fusion import Prediction, predictions_from_logits
from .model.metric_encoder import AspectMap
from .model.network import ArchConfig, HadesNet, ablation_config, arch_preset
from .parsing import TemplateStore
from .training import (
    TrainConfig,
    phase1_train,
    phase2_train,
    predict_logits,
    pseudo_label,
)
from .validation import UNLABELED, check_chunks, check_semi_labels, labels_from_chunks

log = logging.getLogger(__name__)


class HadesClassifier(ClassifierMixin, BaseEstimator):
    """Chunk-level anomaly detector fusing logs and metrics.

    ``fit(X, y, templates=store)`` takes chunks and labels where -1 marks
    unlabeled chunks (``y`` defaults to the chunks' own labels). With
    ``semi_supervised=True`` the labeled chunks train the network first, its
    confident predictions on unlabeled chunks become frozen pseudo-labels, and a
    second phase trains on both. ``variant`` selects an ablation wiring; ``woF``
    trains a logs-only and a metrics-only network and ORs their decisions.
    """

    def __init__(
        self,
        aspect_map: Optional[AspectMap] = None,
        metric_names: Optional[Sequence[str]] = None,
        variant: str = "full",
        arch="desk",
        lr: float = 1e-3,
        batch_size: int = 128,
        epochs_phase1: int = 50,
        epochs_phase2: int = 50,
        mix_weight: float = 0.5,
        confidence_threshold: float = 0.95,
        semi_supervised: bool = True,
        embed_epochs: int = 20,
        embed_window: int = 5,
        seed: int = 0,
    ):
        self.aspect_map = aspect_map
        self.metric_names = metric_names
        self.variant = variant
        self.arch = arch
        self.lr = lr
        self.batch_size = batch_size
        self.epochs_phase1 = epochs_phase1
        self.epochs_phase2 = epochs_phase2
        self.mix_weight = mix_weight
        self.confidence_threshold = confidence_threshold
        self.semi_supervised = semi_supervised
        self.embed_epochs = embed_epochs
        self.embed_window = embed_window
        self.seed = seed

    # -- configuration helpers -------------------------------------------------
    def _arch(self) -> ArchConfig:
        if isinstance(self.arch, ArchConfig):
            return self.arch
        if isinstance(self.arch, dict):
            return ArchConfig.from_dict(self.arch)
        return arch_preset(self.arch)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr, batch_size=self.batch_size, epochs_phase1=self.epochs_phase1,
            epochs_phase2=self.epochs_phase2, mix_weight=self.mix_weight,
            confidence_threshold=self.confidence_threshold, seed=self.seed,
        )

    def _sub_variants(self) -> list:
        return ["woM", "woL"] if ablation_config(self.variant).or_combine else [self.variant]

    def build_network(self, variant: str, featurizer: ChunkFeaturizer, offset: int = 0) -> HadesNet:
        torch.manual_seed(self.seed + offset)
        return HadesNet(self.arch_, ablation_config(variant), featurizer.log_dim_, featurizer.groups_)

    # -- estimator API ---------------------------------------------------------
    def fit(self, X, y=None, templates: Optional[TemplateStore] = None, on_epoch=None):
        chunks = check_chunks(X)
        y = labels_from_chunks(chunks) if y is None else check_semi_labels(y, len(chunks))
        if templates is None:
            raise ConfigError("fit needs the template store that assigned the chunks' event ids")
        self.arch_ = self._arch()
        self.wiring_ = ablation_config(self.variant)
        config = self.train_config()
        labeled_idx = np.flatnonzero(y != UNLABELED)
        unlabeled_idx = np.flatnonzero(y == UNLABELED)
        if len(np.unique(y[labeled_idx])) < 2:
            raise DegenerateLabels("labeled chunks must include both classes")

        self.featurizer_ = ChunkFeaturizer(
            self.aspect_map, self.metric_names, L_max=self.arch_.L_max, semantic=self.wiring_.semantic,
            embed_dim=self.arch_.embed_dim, embed_window=self.embed_window, embed_epochs=self.embed_epochs,
            seed=self.seed,
        ).fit(chunks, templates=templates)
        data = self.featurizer_.transform(chunks)
        labeled = data.subset(labeled_idx)
        y_lab = y[labeled_idx]
        self.classes_ = np.array([0, 1])
        self.nets_ = []
        self.history_ = []
        self.pseudo_ = []
        for k, variant in enumerate(self._sub_variants()):
            net = self.build_network(variant, self.featurizer_)
            trace = phase1_train(net, labeled, y_lab, config, on_epoch=on_epoch)
            kept = np.zeros(0, dtype=np.int64)
            if self.semi_supervised and self.epochs_phase2 > 0:
                unlabeled = data.subset(unlabeled_idx)
                kept, pseudo_y, _ = pseudo_label(net, unlabeled, config.confidence_threshold)
                log.info("%s: %d of %d unlabeled chunks pseudo-labeled", variant, len(kept), len(unlabeled_idx))
                trace += phase2_train(net, labeled, y_lab, unlabeled.subset(kept), pseudo_y, config, on_epoch=on_epoch)
                self.pseudo_.append(dict(zip(unlabeled_idx[kept].tolist(), pseudo_y.tolist())))
            self.nets_.append(net)
            self.history_.append(trace)
        self.templates_ = templates
        return self

    def transform_chunks(self, X) -> ChunkTensors:
        check_is_fitted(self, "nets_")
        return self.featurizer_.transform(check_chunks(X))

    def predict_proba(self, X) -> np.ndarray:
        data = self.transform_chunks(X)
        probs = [torch.softmax(predict_logits(net, data).double(), dim=-1).numpy() for net in self.nets_]
        if len(probs) == 1:
            return probs[0]
        # OR of the single-modality decisions: abnormal iff either is abnormal
        p1 = np.maximum(probs[0][:, 1], probs[1][:, 1])
        return np.stack([1 - p1, p1], axis=1)

    def predict_detailed(self, X) -> list:
        data = self.transform_chunks(X)
        if len(self.nets_) == 1:
            return predictions_from_logits(predict_logits(self.nets_[0], data))
        parts = [predictions_from_logits(predict_logits(net, data)) for net in self.nets_]
        out = []
        for a, b in zip(*parts):
            p1 = max(a.probabilities[1], b.probabilities[1])
            label = int(a.label or b.label)
            out.append(Prediction(label, (1 - p1, p1), max(p1, 1 - p1)))
        return out

    def predict(self, X) -> np.ndarray:
        return np.array([p.label for p in self.predict_detailed(X)], dtype=np.int64)
