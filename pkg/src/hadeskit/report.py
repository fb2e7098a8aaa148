"""Static HTML inspection page: sparklines and log lines for every flagged chunk."""
from __future__ import annotations

import html
from typing import Optional, Sequence

import numpy as np

from .training import EvalReport

_STYLE = """
body{font-family:sans-serif;margin:1.5em;color:#222}
table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:2px 8px;text-align:right}
.chunk{border:1px solid #ddd;margin:1em 0;padding:.5em}
.fp{border-left:6px solid #d9822b}.tp{border-left:6px solid #c23030}.fn{border-left:6px solid #7157d9}
.spark{display:inline-block;margin:2px 8px;font-size:11px}
pre{background:#f6f6f6;padding:.4em;max-height:16em;overflow:auto;font-size:12px}
"""


def sparkline(values: Sequence[float], width: int = 120, height: int = 28) -> str:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return f'<svg width="{width}" height="{height}"></svg>'
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo or 1.0
    xs = np.linspace(1, width - 1, len(v)) if len(v) > 1 else np.array([width / 2])
    ys = height - 1 - (v - lo) / span * (height - 2)
    pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(xs, ys))
    return (
        f'<svg width="{width}" height="{height}" xmlns="http://www.w3.org/2000/svg">'
        f'<polyline fill="none" stroke="#2b6cb0" stroke-width="1.2" points="{pts}"/></svg>'
    )


def _panel(kind: str, window: int, segment, metric_names, messages, confidence) -> str:
    sparks = "".join(
        f'<span class="spark">{sparkline(segment[:, j])}<br>{html.escape(name)}</span>'
        for j, name in enumerate(metric_names)
    ) if segment is not None else "<em>no metric data</em>"
    lines = "\n".join(html.escape(m) for m in messages) if messages else "(no log lines)"
    conf = "" if confidence is None else f" confidence {confidence:.3f}"
    return (
        f'<div class="chunk {kind}"><b>{kind.upper()}</b> window {window}{conf}'
        f"<div>{sparks}</div><pre>{lines}</pre></div>"
    )


def render_html(
    report: EvalReport,
    rows: Sequence[tuple],
    segments: Optional[dict] = None,
    messages: Optional[dict] = None,
    metric_names: Sequence[str] = (),
    title: str = "Anomaly detection report",
) -> str:
    """``rows`` are ``(window_start, y_true, y_pred, confidence)``; ``segments``/``messages`` map window -> data."""
    segments = segments or {}
    messages = messages or {}
    scores = "".join(f"<th>{k}</th>" for k in ("TP", "FP", "FN", "TN", "Rec", "Pre", "F1"))
    vals = "".join(
        f"<td>{getattr(report, k)}</td>" if k in ("TP", "FP", "FN", "TN") else f"<td>{getattr(report, k):.4f}</td>"
        for k in ("TP", "FP", "FN", "TN", "Rec", "Pre", "F1")
    )
    panels = []
    for window, y_true, y_pred, conf in rows:
        if y_pred != 1 and not (y_true == 1 and y_pred == 0):
            continue
        kind = "tp" if y_true == 1 and y_pred == 1 else "fp" if y_pred == 1 else "fn"
        panels.append(_panel(kind, window, segments.get(window), metric_names, messages.get(window, []), conf))
    body = "\n".join(panels) if panels else "<p>No chunks were flagged and no anomalies were missed.</p>"
    fp = ", ".join(str(w) for w in report.fp_windows) or "none"
    fn = ", ".join(str(w) for w in report.fn_windows) or "none"
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        f"<title>{html.escape(title)}</title><style>{_STYLE}</style></head><body>"
        f"<h1>{html.escape(title)}</h1><table><tr>{scores}</tr><tr>{vals}</tr></table>"
        f"<h2>False positive windows</h2><p id=\"fp\">{fp}</p>"
        f"<h2>False negative windows</h2><p id=\"fn\">{fn}</p>"
        f"<h2>Flagged and missed chunks</h2>{body}</body></html>\n"
    )
