"""Turn chunks into model-ready tensors: event vectors, padding masks, standardized metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .embeddings import EmbeddingTable, embed_event, train_embeddings
from .model.log_encoder import pad_or_truncate
from .model.metric_encoder import AspectMap
from .parsing import UNKNOWN_EVENT, TemplateStore
from .validation import check_chunks


@dataclass
class ChunkTensors:
    logs: torch.Tensor  # (N, L_max, E)
    log_mask: torch.Tensor  # (N, L_max) bool
    metrics: torch.Tensor  # (N, T, M)

    def __len__(self):
        return self.metrics.shape[0]

    def subset(self, index) -> "ChunkTensors":
        index = torch.as_tensor(index, dtype=torch.long)
        return ChunkTensors(self.logs[index], self.log_mask[index], self.metrics[index])

    def inputs(self) -> dict:
        return {"logs": self.logs, "log_mask": self.log_mask, "metrics": self.metrics}

    @staticmethod
    def concat(parts: Sequence["ChunkTensors"]) -> "ChunkTensors":
        return ChunkTensors(
            torch.cat([p.logs for p in parts]),
            torch.cat([p.log_mask for p in parts]),
            torch.cat([p.metrics for p in parts]),
        )


def template_corpus(store: TemplateStore, chunks: Sequence) -> list:
    """Token lists of the templates that occur in ``chunks``, ordered by event id."""
    ids = sorted({e for c in chunks for e in c.event_ids if e != UNKNOWN_EVENT})
    return [store.template(i) for i in ids]


class ChunkFeaturizer(TransformerMixin, BaseEstimator):
    """Fit embeddings and metric statistics on training chunks; emit ``ChunkTensors``.

    ``semantic=False`` replaces event vectors with one-hot event ids (width =
    number of templates seen at fit time).
    """

    def __init__(
        self,
        aspect_map: Optional[AspectMap] = None,
        metric_names: Optional[Sequence[str]] = None,
        L_max: int = 64,
        semantic: bool = True,
        embed_dim: int = 32,
        embed_window: int = 5,
        embed_epochs: int = 20,
        seed: int = 0,
        dtype=torch.float32,
    ):
        self.aspect_map = aspect_map
        self.metric_names = metric_names
        self.L_max = L_max
        self.semantic = semantic
        self.embed_dim = embed_dim
        self.embed_window = embed_window
        self.embed_epochs = embed_epochs
        self.seed = seed
        self.dtype = dtype

    def fit(self, X, y=None, templates: Optional[TemplateStore] = None, embeddings: Optional[EmbeddingTable] = None):
        chunks = check_chunks(X)
        if templates is None:
            raise ValueError("ChunkFeaturizer.fit needs the template store that produced the event ids")
        self.templates_ = templates
        names = list(self.metric_names) if self.metric_names is not None else (self.aspect_map.metrics if self.aspect_map else None)
        M = chunks[0].metric_segment.shape[1]
        if names is None:
            names = [f"m{i}" for i in range(M)]
        if len(names) != M:
            raise ValueError(f"{len(names)} metric names for {M} metric columns")
        self.metric_names_ = list(names)
        self.aspect_map_ = self.aspect_map or AspectMap.single(self.metric_names_)
        self.groups_ = self.aspect_map_.column_indices(self.metric_names_)
        rows = np.concatenate([c.metric_segment for c in chunks])
        self.metric_mean_ = rows.mean(axis=0)
        std = rows.std(axis=0)
        self.metric_std_ = np.where(std > 1e-8, std, 1.0)
        if self.semantic:
            self.embeddings_ = embeddings or train_embeddings(
                template_corpus(templates, chunks), dim=self.embed_dim, window=self.embed_window,
                epochs=self.embed_epochs, seed=self.seed,
            )
            self.log_dim_ = self.embeddings_.dim
        else:
            self.embeddings_ = None
            self.n_events_ = len(templates)
            self.log_dim_ = self.n_events_
        self._cache = {}
        return self

    def event_vector(self, event_id: int) -> np.ndarray:
        if event_id == UNKNOWN_EVENT or event_id >= len(self.templates_):
            return np.zeros(self.log_dim_)
        if not self.semantic:
            v = np.zeros(self.log_dim_)
            if event_id < self.n_events_:
                v[event_id] = 1.0
            return v
        tokens = tuple(self.templates_.templates[event_id])
        v = self._cache.get(tokens)
        if v is None:
            v = self._cache[tokens] = embed_event(self.embeddings_, tokens)
        return v

    def log_matrix(self, chunk):
        if not chunk.event_ids:
            return pad_or_truncate(np.zeros((0, self.log_dim_)), self.L_max)
        ids = chunk.event_ids[-self.L_max :]
        return pad_or_truncate(np.stack([self.event_vector(e) for e in ids]), self.L_max)

    def standardize(self, segment) -> np.ndarray:
        return (np.asarray(segment) - self.metric_mean_) / self.metric_std_

    def transform(self, X) -> ChunkTensors:
        check_is_fitted(self, "metric_mean_")
        if not hasattr(self, "_cache"):
            self._cache = {}
        chunks = check_chunks(X)
        mats, masks = zip(*(self.log_matrix(c) for c in chunks))
        metrics = np.stack([self.standardize(c.metric_segment) for c in chunks])
        return ChunkTensors(
            torch.as_tensor(np.stack(mats), dtype=self.dtype),
            torch.as_tensor(np.stack(masks)),
            torch.as_tensor(metrics, dtype=self.dtype),
        )
