"""``hadeskit`` command line: synth, train, detect, eval.

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 numerical divergence during training.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt
from . import io as hio
from .config import RunConfig, parse_value
from .data import LabelSelector, attach_provenance, partition_chunks, select_labeled_subset, temporal_split
from .estimator import HadesClassifier
from .exceptions import ConfigError, DataError, HadesError, NumericalError
from .parsing import TemplateStore
from .report import render_html
from .training import evaluate_predictions

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
CHECKPOINT_NAME = "model.ckpt"
log = logging.getLogger("hadeskit")


class UsageError(Exception):
    pass


# -- shared pieces -------------------------------------------------------------

def _threads() -> None:
    n = os.environ.get("HADESKIT_THREADS")
    if n:
        import torch

        try:
            torch.set_num_threads(max(1, int(n)))
        except ValueError:
            raise ConfigError(f"HADESKIT_THREADS must be an integer, got {n!r}") from None


def _split_overrides(extra: list) -> list:
    """``["--train.lr", "0.01", "--seed=3"]`` -> ``[("train.lr", 0.01), ("seed", 3)]``."""
    out, i = [], 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            if i + 1 >= len(extra):
                raise UsageError(f"override {tok} needs a value")
            value = extra[i + 1]
            i += 1
        out.append((key, parse_value(value)))
        i += 1
    return out


def _config(args, extra) -> RunConfig:
    overrides = []
    for attr, key in (
        ("seed", "seed"), ("out", "paths.out"), ("logs", "paths.logs"), ("metrics", "paths.metrics"),
        ("aspects", "paths.aspects"), ("labels", "paths.labels"), ("provenance", "paths.provenance"),
        ("variant", "variant"), ("T", "chunking.T"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append((key, value))
    return RunConfig.load(args.config, tuple(overrides) + tuple(_split_overrides(extra)))


def _chunks(cfg: RunConfig, parser):
    p = cfg.require_paths("logs", "metrics")
    logs = hio.read_logs(p["logs"])
    metrics = hio.read_metrics(p["metrics"])
    return logs, metrics, partition_chunks(logs, metrics, cfg.T, cfg.stride, parser=parser)


# -- commands --------------------------------------------------------------------

def cmd_synth(cfg: RunConfig, args) -> int:
    from .synth import standard_suite, write_corpus

    if args.suite != "standard":
        raise ConfigError(f"unknown suite {args.suite!r}")
    out = cfg.require_paths("out")["out"]
    corpus = standard_suite(cfg.seed)
    paths = write_corpus(corpus, out, T=cfg.T, stride=cfg.stride)
    print(f"wrote {len(corpus.logs)} log lines, {len(corpus.metrics)} metric rows, {len(corpus.faults)} faults")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return EXIT_OK


def build_training_set(cfg: RunConfig):
    """Chunks, semi-supervised label vector and template store, exactly as ``train`` uses them."""
    paths = cfg.require_paths("logs", "metrics", "aspects", "labels")
    store = TemplateStore()
    _, metrics, chunks = _chunks(cfg, store.parse_message)
    amap = hio.read_aspect_map(paths["aspects"])
    amap.column_indices(metrics.metric_names)
    labels = hio.read_labels(paths["labels"])
    chunks = [c.with_label(labels[c.window_start], "human") if c.window_start in labels else c for c in chunks]
    if cfg.tree["paths"]["provenance"]:
        chunks = attach_provenance(chunks, hio.read_provenance(cfg.require_paths("provenance")["provenance"]))
    test_start = None
    frac = float(cfg["chunking.train_frac"])
    if frac < 1:
        chunks, test = temporal_split(chunks, frac)
        test_start = test[0].window_start
    sel = cfg.tree["select"]
    if sel["workloads"] or sel["faults"]:
        if not cfg.tree["paths"]["provenance"]:
            raise ConfigError("label selection needs paths.provenance")
        split = select_labeled_subset(chunks, LabelSelector(frozenset(sel["workloads"]), frozenset(sel["faults"])))
        chunks = split.train_labeled + split.train_unlabeled
        chunks.sort(key=lambda c: c.window_start)
    y = np.array([-1 if c.label is None else c.label for c in chunks], dtype=np.int64)
    return chunks, y, store, amap, list(metrics.metric_names), test_start


def make_classifier(cfg: RunConfig, amap, metric_names) -> HadesClassifier:
    t = cfg.tree["train"]
    return HadesClassifier(
        amap, metric_names, variant=cfg.variant, arch=cfg.arch(), lr=t["lr"], batch_size=t["batch_size"],
        epochs_phase1=t["epochs_phase1"], epochs_phase2=t["epochs_phase2"], mix_weight=t["mix_weight"],
        confidence_threshold=t["confidence_threshold"], semi_supervised=t["semi_supervised"],
        embed_epochs=t["embed_epochs"], embed_window=t["embed_window"], seed=cfg.seed,
    )


def cmd_train(cfg: RunConfig, args) -> int:
    chunks, y, store, amap, names, test_start = build_training_set(cfg)
    out = cfg.require_paths("out")["out"]
    out.mkdir(parents=True, exist_ok=True)
    clf = make_classifier(cfg, amap, names)
    with open(out / "train_log.jsonl", "w", encoding="utf-8") as fh:
        def on_epoch(report):
            fh.write(json.dumps(report.to_dict(), sort_keys=True) + "\n")

        clf.fit(chunks, y, templates=store, on_epoch=on_epoch)
    digest = ckpt.save(clf, out / CHECKPOINT_NAME)
    (out / "train_meta.json").write_text(
        json.dumps({"checkpoint_sha256": digest, "n_chunks": len(chunks), "n_labeled": int((y >= 0).sum()),
                    "test_start_ms": test_start, "config": cfg.tree}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"checkpoint {out / CHECKPOINT_NAME} sha256 {digest}")
    return EXIT_OK


def detect(model: HadesClassifier, chunks, remine: bool = False):
    """Library-level detection used by ``detect``: (window_start, label, confidence) rows."""
    preds = model.predict_detailed(chunks) if chunks else []
    return [(c.window_start, p.label, p.confidence) for c, p in zip(chunks, preds)]


def cmd_detect(cfg: RunConfig, args) -> int:
    model = ckpt.load(args.checkpoint)
    store = model.templates_
    if args.templates:
        given = TemplateStore.from_json(Path(args.templates).read_text(encoding="utf-8"))
        if given.digest() != store.digest() and not args.remine:
            raise DataError("template store hash differs from the checkpoint (pass --remine to re-mine)")
    if args.remine:
        store = store.copy(frozen=False)
        model.featurizer_.templates_ = store
        model.featurizer_._cache = {}
    else:
        store = store.copy(frozen=True)
    p = cfg.require_paths("logs", "metrics")
    logs = hio.read_logs(p["logs"])
    metrics = hio.read_metrics(p["metrics"])
    known = list(model.featurizer_.metric_names_)
    unseen = [m for m in metrics.metric_names if m not in known]
    if unseen:
        raise DataError(f"metric columns unknown to the checkpoint: {unseen}")
    metrics = metrics.select(known)
    chunks = partition_chunks(logs, metrics, cfg.T, cfg.stride, parser=store.parse_message)
    if args.start_ms is not None:
        chunks = [c for c in chunks if c.window_start >= args.start_ms]
    t0 = time.perf_counter()
    rows = detect(model, chunks)
    elapsed = time.perf_counter() - t0
    out = cfg.require_paths("out")["out"]
    out.mkdir(parents=True, exist_ok=True)
    hio.write_predictions(out / "predictions.csv", rows)
    per_chunk = elapsed / max(len(rows), 1)
    print(f"{len(rows)} chunks, {sum(r[1] for r in rows)} flagged, {per_chunk * 1000:.2f} ms per chunk")
    return EXIT_OK


def cmd_eval(cfg: RunConfig, args) -> int:
    preds = hio.read_predictions(args.predictions)
    labels = hio.read_labels(cfg.require_paths("labels")["labels"])
    missing = [w for w, _, _ in preds if w not in labels]
    if missing:
        raise DataError(f"{len(missing)} predicted windows have no label (first: {missing[0]})")
    windows = [w for w, _, _ in preds]
    y_true = [labels[w] for w in windows]
    y_pred = [l for _, l, _ in preds]
    report = evaluate_predictions(y_true, y_pred, windows)
    out = cfg.require_paths("out")["out"]
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(with_windows=True), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    segments, messages, names = {}, {}, []
    if cfg.tree["paths"]["logs"] and cfg.tree["paths"]["metrics"]:
        logs, metrics, chunks = _chunks(cfg, lambda m: 0)
        names = list(metrics.metric_names)
        wanted = {w for w, yt, yp in zip(windows, y_true, y_pred) if yt or yp}
        by_start = {c.window_start: c for c in chunks}
        ts = np.array([r.timestamp for r in logs], dtype=np.int64)
        order = np.argsort(ts, kind="stable")
        ts = ts[order]
        for w in wanted:
            c = by_start.get(w)
            if c is None:
                continue
            segments[w] = c.metric_segment
            lo, hi = np.searchsorted(ts, [c.window_start, c.window_end])
            messages[w] = [logs[i].message for i in order[lo:hi]]
    rows = [(w, yt, yp, conf) for (w, yp, conf), yt in zip(preds, y_true)]
    (out / "report.html").write_text(render_html(report, rows, segments, messages, names), encoding="utf-8")
    print(json.dumps(report.to_dict()))
    return EXIT_OK


# -- argument parsing --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--T", type=int, help="chunk length in grid steps")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--logs")
    data.add_argument("--metrics")

    parser = argparse.ArgumentParser(
        prog="hadeskit", description="Log and metric anomaly detection.",
        epilog="Any config key can be overridden as --section.key VALUE.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic telemetry corpus")
    p.add_argument("--suite", default="standard")

    p = sub.add_parser("train", parents=[common, data], help="train a detector and write a checkpoint")
    p.add_argument("--aspects")
    p.add_argument("--labels")
    p.add_argument("--provenance")
    p.add_argument("--variant")

    p = sub.add_parser("detect", parents=[common, data], help="predict chunk labels with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--templates", help="template store JSON expected to match the checkpoint")
    p.add_argument("--remine", action="store_true", help="re-mine templates instead of requiring a match")
    p.add_argument("--start-ms", type=int, help="only chunks starting at or after this timestamp")

    p = sub.add_parser("eval", parents=[common, data], help="score predictions and render the report")
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels")
    return parser


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "detect": cmd_detect, "eval": cmd_eval}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _threads()
        cfg = _config(args, extra)
        if args.command == "synth" and not cfg.tree["paths"]["out"]:
            raise UsageError("synth requires --out")
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hadeskit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"hadeskit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"hadeskit: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, HadesError, OSError) as exc:
        print(f"hadeskit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
