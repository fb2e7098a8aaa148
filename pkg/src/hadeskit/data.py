"""Telemetry records, uniform metric grids, chunking and dataset splits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .exceptions import (
    DataError,
    EmptyInput,
    EmptySelection,
    InsufficientData,
    MissingColumn,
)

LABEL_SOURCES = ("human", "pseudo", "none")


@dataclass(frozen=True)
class RawLogRecord:
    timestamp: int
    message: str

    def __post_init__(self):
        if self.timestamp < 0:
            raise DataError(f"negative log timestamp {self.timestamp}")
        if not self.message.strip():
            raise DataError("empty log message")


@dataclass(frozen=True, eq=False)
class MetricFrame:
    """Metrics on a uniform grid: ``values[k]`` was sampled at ``timestamps[k]``."""

    timestamps: np.ndarray
    values: np.ndarray
    metric_names: tuple

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[0] != ts.shape[0]:
            raise DataError(f"values shape {vals.shape} does not match {ts.shape[0]} timestamps")
        if vals.shape[1] < 1 or vals.shape[1] != len(self.metric_names):
            raise DataError("need one unique name per metric column")
        if len(set(self.metric_names)) != len(self.metric_names):
            raise DataError("metric names must be unique")
        if ts.shape[0] >= 2:
            steps = np.diff(ts)
            if steps[0] <= 0 or np.any(steps != steps[0]):
                raise DataError("metric timestamps must be strictly increasing with uniform spacing")
        if np.isnan(vals).any():
            raise DataError("metric frame contains NaN; regularize first")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "metric_names", tuple(self.metric_names))

    @property
    def delta(self) -> int:
        if len(self.timestamps) < 2:
            raise InsufficientData("a single sample has no spacing")
        return int(self.timestamps[1] - self.timestamps[0])

    def __len__(self):
        return len(self.timestamps)

    def select(self, names: Sequence[str]) -> "MetricFrame":
        """Return the columns ``names`` in that order."""
        index = {n: i for i, n in enumerate(self.metric_names)}
        missing = [n for n in names if n not in index]
        if missing:
            raise MissingColumn(missing[0])
        cols = [index[n] for n in names]
        return MetricFrame(self.timestamps, self.values[:, cols], tuple(names))


@dataclass(frozen=True)
class ProvenanceRecord:
    ts_start: int
    ts_end: int
    fault_id: Optional[str]
    workload_id: Optional[str]


@dataclass(frozen=True, eq=False)
class Chunk:
    chunk_id: str
    window_start: int
    duration: int
    event_ids: tuple
    metric_segment: np.ndarray
    label: Optional[int] = None
    label_source: str = "none"
    workload_id: Optional[str] = None
    fault_ids: tuple = ()

    def __post_init__(self):
        if self.label_source not in LABEL_SOURCES:
            raise DataError(f"unknown label source {self.label_source!r}")
        if self.label is not None and self.label not in (0, 1):
            raise DataError(f"chunk label must be 0 or 1, got {self.label!r}")
        object.__setattr__(self, "event_ids", tuple(int(e) for e in self.event_ids))

    @property
    def T(self) -> int:
        return self.metric_segment.shape[0]

    @property
    def window_end(self) -> int:
        return self.window_start + self.duration

    def with_label(self, label: Optional[int], source: str) -> "Chunk":
        return replace(self, label=label, label_source=source if label is not None else "none")


@dataclass
class DatasetSplit:
    train_labeled: list
    train_unlabeled: list
    test: list = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for part in (self.train_labeled, self.train_unlabeled, self.test):
            for c in part:
                if c.chunk_id in seen:
                    raise DataError(f"chunk {c.chunk_id} appears in two splits")
                seen.add(c.chunk_id)

    @property
    def labeled_fraction(self) -> float:
        n = len(self.train_labeled) + len(self.train_unlabeled)
        return len(self.train_labeled) / n if n else 0.0


def regularize_metrics(timestamps, values, metric_names: Sequence[str], delta: int) -> MetricFrame:
    """Resample irregular metric rows onto a uniform grid.

    The grid starts at the first sample and steps by ``delta`` ms up to the last
    sample. Each grid point takes the last observation at or before it (per column,
    NaN counts as unobserved); leading gaps take the first observed value.
    """
    ts = np.asarray(timestamps, dtype=np.int64)
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim == 1:
        vals = vals[:, None]
    if ts.shape[0] < 2:
        raise EmptyInput("need at least two metric samples")
    if delta <= 0:
        raise DataError(f"grid spacing must be positive, got {delta}")
    order = np.argsort(ts, kind="stable")
    ts, vals = ts[order], vals[order]
    n_steps = int((ts[-1] - ts[0]) // delta) + 1
    grid = ts[0] + delta * np.arange(n_steps, dtype=np.int64)
    # index of the last sample at or before each grid point
    pos = np.searchsorted(ts, grid, side="right") - 1
    out = np.empty((n_steps, vals.shape[1]))
    for j, name in enumerate(metric_names):
        col = vals[:, j]
        observed = ~np.isnan(col)
        if not observed.any():
            raise MissingColumn(name)
        obs_idx = np.where(observed, np.arange(len(col)), -1)
        last_obs = np.maximum.accumulate(obs_idx)[pos]
        first = col[np.argmax(observed)]
        out[:, j] = np.where(last_obs >= 0, col[np.maximum(last_obs, 0)], first)
    return MetricFrame(grid, out, tuple(metric_names))


def sort_logs(logs: Iterable[RawLogRecord]) -> list:
    return sorted(logs, key=lambda r: r.timestamp)


def partition_chunks(
    logs: Sequence[RawLogRecord],
    metrics: MetricFrame,
    T: int,
    stride: Optional[int] = None,
    parser: Optional[Callable[[str], int]] = None,
) -> list:
    """Cut aligned telemetry into windows of ``T`` grid steps.

    Windows start at grid indices 0, stride, 2*stride, ...; the trailing partial
    window is dropped. ``parser`` maps a raw message to an event id and is called
    once per record in chronological order; a fresh template store is used when
    it is omitted.
    """
    stride = T if stride is None else stride
    if T < 1 or stride < 1:
        raise DataError("T and stride must be >= 1")
    if len(metrics) < T:
        raise InsufficientData(f"metric grid has {len(metrics)} rows, need at least T={T}")
    if parser is None:
        from .parsing import TemplateStore

        parser = TemplateStore().parse_message
    delta = metrics.delta if len(metrics) > 1 else 1
    records = sort_logs(logs)
    log_ts = np.array([r.timestamp for r in records], dtype=np.int64)
    log_ids = np.array([parser(r.message) for r in records], dtype=np.int64)
    chunks = []
    for s in range(0, len(metrics) - T + 1, stride):
        start = int(metrics.timestamps[s])
        duration = T * delta
        lo, hi = np.searchsorted(log_ts, [start, start + duration], side="left")
        chunks.append(
            Chunk(
                chunk_id=f"w{start}+{duration}",
                window_start=start,
                duration=duration,
                event_ids=tuple(log_ids[lo:hi].tolist()),
                metric_segment=metrics.values[s : s + T].copy(),
            )
        )
    return chunks


def chunk_messages(chunk: Chunk, logs: Sequence[RawLogRecord]) -> list:
    """Raw log lines that fall inside the chunk window (for reports)."""
    return [r for r in sort_logs(logs) if chunk.window_start <= r.timestamp < chunk.window_end]


def attach_provenance(chunks: Sequence[Chunk], provenance: Sequence[ProvenanceRecord]) -> list:
    """Tag chunks with the workload run they overlap most and every overlapping fault."""
    out = []
    for c in chunks:
        best, best_overlap, faults = None, 0, []
        for p in provenance:
            overlap = min(c.window_end, p.ts_end) - max(c.window_start, p.ts_start)
            if overlap <= 0:
                continue
            if p.fault_id:
                faults.append(p.fault_id)
            elif p.workload_id and overlap > best_overlap:
                best, best_overlap = p.workload_id, overlap
        out.append(replace(c, workload_id=best, fault_ids=tuple(faults)))
    return out


def temporal_split(chunks: Sequence[Chunk], train_frac: float = 0.7):
    """Split chronologically; the cut never lands inside a run of abnormal chunks."""
    n = len(chunks)
    if n < 2:
        raise InsufficientData("need at least two chunks to split")
    if not 0 < train_frac < 1:
        raise DataError(f"train_frac must lie in (0, 1), got {train_frac}")
    starts = [c.window_start for c in chunks]
    if any(b < a for a, b in zip(starts, starts[1:])):
        raise DataError("chunks must be sorted by window_start")
    cut = math.floor(train_frac * n)
    while 0 < cut < n and chunks[cut - 1].label == 1 and chunks[cut].label == 1:
        cut -= 1
    if cut == 0 or cut == n:
        raise InsufficientData("split leaves an empty train or test set")
    return list(chunks[:cut]), list(chunks[cut:])


def _tag_matches(tag: str, patterns: frozenset) -> bool:
    # "memory_stress#2" is matched by its instance id or by its type name
    return tag in patterns or tag.split("#", 1)[0] in patterns


@dataclass(frozen=True)
class LabelSelector:
    """Which training chunks keep their human labels.

    A fault-free chunk is selected when its workload matches ``workloads``; a
    chunk overlapping faults is selected when all of them match ``faults``.
    Patterns are either a type name (``"memory_stress"``) or an instance id
    (``"memory_stress#0"``); ``"*"`` matches anything.
    """

    workloads: frozenset = frozenset()
    faults: frozenset = frozenset()

    @classmethod
    def everything(cls) -> "LabelSelector":
        return cls(frozenset({"*"}), frozenset({"*"}))

    def matches(self, chunk: Chunk) -> bool:
        if chunk.fault_ids:
            return "*" in self.faults or all(_tag_matches(f, self.faults) for f in chunk.fault_ids)
        if chunk.workload_id is None:
            return "*" in self.workloads
        return "*" in self.workloads or _tag_matches(chunk.workload_id, self.workloads)


def select_labeled_subset(train: Sequence[Chunk], selector: LabelSelector, test: Sequence[Chunk] = ()) -> DatasetSplit:
    labeled, unlabeled = [], []
    for c in train:
        if selector.matches(c) and c.label is not None:
            labeled.append(c.with_label(c.label, "human"))
        else:
            unlabeled.append(c.with_label(None, "none"))
    if not labeled:
        raise EmptySelection("label selector matched no training chunk")
    return DatasetSplit(labeled, unlabeled, list(test))
