import csv
import hashlib
import json

import numpy as np
import pytest

from conftest import TINY_ARCH
from hadeskit import checkpoint as ckpt
from hadeskit import io as hio
from hadeskit.cli import CHECKPOINT_NAME, detect, main
from hadeskit.data import partition_chunks
from hadeskit.synth import write_corpus

TINY_TOML = "\n".join(
    ["seed = 0", "[arch]", 'preset = "custom"']
    + [f"{k} = {json.dumps(v)}" for k, v in TINY_ARCH.items()]
    + ["[train]", "batch_size = 16", "epochs_phase1 = 3", "epochs_phase2 = 2", "embed_epochs = 2", "confidence_threshold = 0.51"]
) + "\n"


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory, small_corpus):
    d = tmp_path_factory.mktemp("corpus")
    paths = write_corpus(small_corpus, d, T=10)
    rows = hio.read_labels(paths["labels"])
    # hide two thirds of the normal labels so training is semi-supervised
    keep = {w: y for i, (w, y) in enumerate(sorted(rows.items())) if y or i % 3 == 0}
    hio.write_labels(d / "train_labels.csv", sorted(keep.items()))
    (d / "run.toml").write_text(TINY_TOML)
    return d


def train_args(d, out, *extra):
    return ["train", "--config", str(d / "run.toml"), "--logs", str(d / "logs.jsonl"), "--metrics", str(d / "metrics.csv"),
            "--aspects", str(d / "aspects.json"), "--labels", str(d / "train_labels.csv"), "--out", str(out), *extra]


@pytest.fixture(scope="module")
def trained(corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(train_args(corpus_dir, out)) == 0
    return out


# -- synth -------------------------------------------------------------------------------

def test_synth_is_deterministic_per_seed(tmp_path):
    assert main(["synth", "--suite", "standard", "--seed", "7", "--out", str(tmp_path / "a")]) == 0
    assert main(["synth", "--suite", "standard", "--seed", "7", "--out", str(tmp_path / "b")]) == 0
    names = ["logs.jsonl", "metrics.csv", "provenance.csv", "labels.csv"]
    assert [sha(tmp_path / "a" / n) for n in names] == [sha(tmp_path / "b" / n) for n in names]
    header = (tmp_path / "a" / "metrics.csv").read_text().split("\n", 1)[0].split(",")
    assert len(header) - 1 >= 8
    with open(tmp_path / "a" / "provenance.csv") as fh:
        kinds = {r["fault_id"].split("#")[0] for r in csv.DictReader(fh) if r["fault_id"]}
    assert len(kinds) == 8


def test_synth_without_out_is_a_usage_error(capsys):
    assert main(["synth", "--seed", "1"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_bad_override_is_a_config_error(tmp_path):
    assert main(["synth", "--out", str(tmp_path), "--train.lrate", "1"]) == 2
    assert main(["synth", "--out", str(tmp_path), "--suite", "other"]) == 2


# -- train --------------------------------------------------------------------------------

def test_train_writes_checkpoint_and_log(trained):
    lines = (trained / "train_log.jsonl").read_text().splitlines()
    assert len(lines) == 3 + 2
    assert {"L_plus", "L_minus", "L_total"} <= set(json.loads(lines[-1]))
    meta = json.loads((trained / "train_meta.json").read_text())
    assert meta["checkpoint_sha256"] == sha(trained / CHECKPOINT_NAME)
    assert 0 < meta["n_labeled"] < meta["n_chunks"]


def test_train_rerun_gives_same_checkpoint_hash(corpus_dir, trained, tmp_path):
    assert main(train_args(corpus_dir, tmp_path)) == 0
    assert sha(tmp_path / CHECKPOINT_NAME) == sha(trained / CHECKPOINT_NAME)


def test_train_log_only_variant(corpus_dir, tmp_path):
    assert main(train_args(corpus_dir, tmp_path, "--variant", "woM")) == 0
    model = ckpt.load(tmp_path / CHECKPOINT_NAME)
    assert model.variant == "woM" and model.nets_[0].metric_encoder is None


def test_train_data_and_numeric_errors(corpus_dir, tmp_path):
    bad = tmp_path / "logs.jsonl"
    bad.write_text("not json\n")
    args = train_args(corpus_dir, tmp_path / "o")
    args[args.index("--logs") + 1] = str(bad)
    assert main(args) == 3
    assert main(train_args(corpus_dir, tmp_path / "p", "--train.lr", "1e30")) == 4


# -- detect --------------------------------------------------------------------------------

def detect_args(d, run, out, logs=None, metrics=None):
    return ["detect", "--checkpoint", str(run / CHECKPOINT_NAME), "--logs", str(logs or d / "logs.jsonl"),
            "--metrics", str(metrics or d / "metrics.csv"), "--out", str(out)]


def test_detect_matches_library_predictions(corpus_dir, trained, tmp_path):
    assert main(detect_args(corpus_dir, trained, tmp_path)) == 0
    rows = hio.read_predictions(tmp_path / "predictions.csv")
    model = ckpt.load(trained / CHECKPOINT_NAME)
    store = model.templates_.copy(frozen=True)
    chunks = partition_chunks(hio.read_logs(corpus_dir / "logs.jsonl"), hio.read_metrics(corpus_dir / "metrics.csv"), 10,
                              parser=store.parse_message)
    expected = detect(model, chunks)
    assert [r[:2] for r in rows] == [e[:2] for e in expected]
    np.testing.assert_allclose([r[2] for r in rows], [e[2] for e in expected], atol=5e-7)
    assert len(rows) == 60


def test_detect_with_empty_logs(corpus_dir, trained, tmp_path):
    (tmp_path / "empty.jsonl").write_text("")
    assert main(detect_args(corpus_dir, trained, tmp_path, logs=tmp_path / "empty.jsonl")) == 0
    rows = hio.read_predictions(tmp_path / "predictions.csv")
    assert len(rows) == 60 and all(0.5 <= c <= 1 for _, _, c in rows)


def test_detect_rejects_unseen_metric_columns(corpus_dir, trained, tmp_path):
    text = (corpus_dir / "metrics.csv").read_text().splitlines()
    text[0] += ",gpu_util"
    text[1:] = [line + ",0.5" for line in text[1:]]
    (tmp_path / "m.csv").write_text("\n".join(text) + "\n")
    assert main(detect_args(corpus_dir, trained, tmp_path, metrics=tmp_path / "m.csv")) == 3


# -- eval -----------------------------------------------------------------------------------

def eval_args(d, preds, out, labels=None):
    return ["eval", "--predictions", str(preds), "--labels", str(labels or d / "labels.csv"),
            "--logs", str(d / "logs.jsonl"), "--metrics", str(d / "metrics.csv"), "--out", str(out)]


def test_eval_perfect_predictions(corpus_dir, tmp_path):
    truth = hio.read_labels(corpus_dir / "labels.csv")
    hio.write_predictions(tmp_path / "p.csv", [(w, y, 1.0) for w, y in sorted(truth.items())])
    assert main(eval_args(corpus_dir, tmp_path / "p.csv", tmp_path)) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["F1"] == 1.0 and report["fp_windows"] == [] and report["fn_windows"] == []
    assert "<svg" in (tmp_path / "report.html").read_text()


def test_eval_lists_exactly_the_wrong_windows(corpus_dir, tmp_path):
    truth = sorted(hio.read_labels(corpus_dir / "labels.csv").items())
    rng = np.random.default_rng(0)
    flips = set(rng.choice(len(truth), size=12, replace=False).tolist())
    preds = [(w, 1 - y if i in flips else y, 0.9) for i, (w, y) in enumerate(truth)]
    hio.write_predictions(tmp_path / "p.csv", preds)
    assert main(eval_args(corpus_dir, tmp_path / "p.csv", tmp_path)) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["fp_windows"] == [w for (w, y), (_, p, _) in zip(truth, preds) if y == 0 and p == 1]
    assert report["fn_windows"] == [w for (w, y), (_, p, _) in zip(truth, preds) if y == 1 and p == 0]
    page = (tmp_path / "report.html").read_text()
    assert page.count('class="chunk fp"') == len(report["fp_windows"])


def test_eval_empty_anomaly_corpus_renders(corpus_dir, tmp_path):
    normal = [(w, 0) for w, y in sorted(hio.read_labels(corpus_dir / "labels.csv").items()) if y == 0]
    hio.write_labels(tmp_path / "y.csv", normal)
    hio.write_predictions(tmp_path / "p.csv", [(w, 0, 0.99) for w, _ in normal])
    assert main(eval_args(corpus_dir, tmp_path / "p.csv", tmp_path, labels=tmp_path / "y.csv")) == 0
    assert "No chunks were flagged" in (tmp_path / "report.html").read_text()


def test_eval_window_mismatch(corpus_dir, tmp_path):
    hio.write_predictions(tmp_path / "p.csv", [(123, 1, 0.9)])
    assert main(eval_args(corpus_dir, tmp_path / "p.csv", tmp_path)) == 3
