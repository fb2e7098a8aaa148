"""Readers and writers for the on-disk telemetry formats."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data import MetricFrame, ProvenanceRecord, RawLogRecord, regularize_metrics
from .exceptions import DataError
from .model.metric_encoder import AspectMap


def read_logs(path) -> list:
    """JSON-Lines, one ``{"ts": <epoch ms>, "msg": <text>}`` object per line."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(RawLogRecord(int(obj["ts"]), str(obj["msg"])))
            except (KeyError, ValueError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad log record ({exc})") from exc
    return records


def write_logs(path, logs: Iterable[RawLogRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in logs:
            fh.write(json.dumps({"ts": r.timestamp, "msg": r.message}, ensure_ascii=False) + "\n")


def read_metric_samples(path):
    """Raw CSV rows: ``(timestamps, values with NaN for blanks, names)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty metric file") from None
        if not header or header[0].strip() != "ts":
            raise DataError(f"{path}: first header column must be 'ts'")
        names = [h.strip() for h in header[1:]]
        ts, rows = [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            try:
                ts.append(int(row[0]))
                rows.append([float(v) if v.strip() else math.nan for v in row[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
            if len(rows[-1]) != len(names):
                raise DataError(f"{path}:{lineno}: expected {len(names)} values")
    return np.array(ts, dtype=np.int64), np.array(rows, dtype=np.float64).reshape(len(ts), len(names)), names


def read_metrics(path, delta=None) -> MetricFrame:
    ts, values, names = read_metric_samples(path)
    if delta is None:
        if len(ts) < 2:
            from .exceptions import EmptyInput

            raise EmptyInput(f"{path}: need at least two metric samples")
        delta = int(np.median(np.diff(np.sort(ts))))
    return regularize_metrics(ts, values, names, delta)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_metrics(path, frame: MetricFrame) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ts", *frame.metric_names])
        for t, row in zip(frame.timestamps, frame.values):
            w.writerow([int(t), *(_fmt(v) for v in row)])


def read_provenance(path) -> list:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                ProvenanceRecord(int(row["ts_start"]), int(row["ts_end"]), row["fault_id"] or None, row["workload_id"] or None)
            )
    return out


def write_provenance(path, records: Sequence[ProvenanceRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ts_start", "ts_end", "fault_id", "workload_id"])
        for p in records:
            w.writerow([p.ts_start, p.ts_end, p.fault_id or "", p.workload_id or ""])


def read_labels(path) -> dict:
    """``chunk_window_start,label`` CSV -> ``{window_start: label}``."""
    with open(path, newline="", encoding="utf-8") as fh:
        return {int(r["chunk_window_start"]): int(r["label"]) for r in csv.DictReader(fh)}


def write_labels(path, rows: Iterable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chunk_window_start", "label"])
        for start, label in rows:
            w.writerow([int(start), int(label)])


def read_predictions(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(int(r["chunk_window_start"]), int(r["label"]), float(r["confidence"])) for r in csv.DictReader(fh)]


def write_predictions(path, rows: Iterable) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chunk_window_start", "label", "confidence"])
        for start, label, conf in rows:
            w.writerow([int(start), int(label), f"{conf:.6f}"])


def read_aspect_map(path) -> AspectMap:
    return AspectMap.from_json(Path(path).read_text(encoding="utf-8"))


def write_aspect_map(path, amap: AspectMap) -> None:
    Path(path).write_text(json.dumps(amap.to_dict(), indent=2) + "\n", encoding="utf-8")
