"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .data import Chunk
from .exceptions import DataError, EmptyInput, NumericalError

UNLABELED = -1


def check_chunks(X, allow_empty: bool = False) -> list:
    """Return ``X`` as a list of chunks sharing one metric segment shape."""
    if isinstance(X, Chunk):
        raise DataError("expected a sequence of chunks, got a single Chunk")
    chunks = list(X)
    if not chunks:
        if allow_empty:
            return chunks
        raise EmptyInput("no chunks given")
    for c in chunks:
        if not isinstance(c, Chunk):
            raise DataError(f"expected Chunk instances, got {type(c).__name__}")
    shape = chunks[0].metric_segment.shape
    for c in chunks:
        if c.metric_segment.shape != shape:
            raise DataError(f"chunk {c.chunk_id} has metric shape {c.metric_segment.shape}, expected {shape}")
        if not np.isfinite(c.metric_segment).all():
            raise NumericalError(f"chunk {c.chunk_id} has non-finite metric values")
    return chunks


def labels_from_chunks(chunks: Sequence[Chunk]) -> np.ndarray:
    """Chunk labels with ``UNLABELED`` (-1) for chunks that carry none."""
    return np.array([UNLABELED if c.label is None else c.label for c in chunks], dtype=np.int64)


def check_semi_labels(y, n: int) -> np.ndarray:
    """Validate a label vector where -1 marks unlabeled samples (sklearn convention)."""
    y = np.asarray(y)
    if y.shape != (n,):
        raise DataError(f"expected {n} labels, got shape {y.shape}")
    if not np.isin(y, (UNLABELED, 0, 1)).all():
        raise DataError("labels must be 0, 1 or -1 (unlabeled)")
    return y.astype(np.int64)


def check_binary(y, name: str = "labels") -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or not np.isin(y, (0, 1)).all():
        raise DataError(f"{name} must be a 1-d array of 0/1")
    return y.astype(np.int64)
