"""Benchmark protocol on the synthetic suite: chunk, split, select labels, fit, score."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
import numpy as np

from .data import LabelSelector, select_labeled_subset, temporal_split
from .estimator import HadesClassifier
from .parsing import TemplateStore
from .synth import SuiteConfig, chunk_manifestations, emit_labels, standard_selector, standard_suite
from .training import EvalReport, evaluate_predictions


# Training settings for the desk-scale suite. The suite yields only a few hundred
# labeled chunks, so batches of 128 would mean about three optimizer steps per epoch.
PROTOCOL = dict(batch_size=8, epochs_phase1=50, epochs_phase2=50)


@dataclass
class Prepared:
    corpus: object
    store: TemplateStore
    train: list
    test: list
    split: object  # DatasetSplit with the semi-supervised labeling
    T: int


@dataclass
class RunResult:
    variant: str
    seed: int
    T: int
    semi: bool
    report: EvalReport
    y_pred: np.ndarray
    y_true: np.ndarray
    seconds: float
    modality: dict = field(default_factory=dict)  # {"log_silent": recall, "metric_silent": recall}
    model: object = None


def prepare(seed: int, T: int = 10, suite: SuiteConfig = SuiteConfig(), train_frac: float = 0.7) -> Prepared:
    corpus = standard_suite(seed, suite)
    store = TemplateStore()
    chunks = emit_labels(corpus, T, parser=store.parse_message)
    train, test = temporal_split(chunks, train_frac)
    split = select_labeled_subset(train, standard_selector(corpus), test)
    return Prepared(corpus, store, train, test, split, T)


def modality_classes(prep: Prepared, chunks) -> np.ndarray:
    """0 normal, 1 log-silent anomaly, 2 metric-silent anomaly, 3 dual."""
    out = []
    for c in chunks:
        m = chunk_manifestations(prep.corpus, c)
        out.append({(False, False): 0, (True, False): 1, (False, True): 2, (True, True): 3}[(m["metric"], m["log"])])
    return np.array(out)


def run(
    prep: Prepared,
    variant: str = "full",
    semi: bool = True,
    seed: int = 0,
    **params,
) -> RunResult:
    """Fit one variant on the prepared split and score it on the test chunks.

    ``semi=False`` trains on every training label, the fully supervised reference.
    """
    if semi:
        X = prep.split.train_labeled + prep.split.train_unlabeled
        y = [c.label if c.label_source == "human" else -1 for c in X]
    else:
        X = prep.train
        y = [c.label for c in X]
    settings = {**PROTOCOL, **params}
    clf = HadesClassifier(
        prep.corpus.aspect_map, list(prep.corpus.metrics.metric_names), variant=variant, seed=seed,
        semi_supervised=semi, **settings,
    )
    t0 = time.perf_counter()
    clf.fit(X, y, templates=prep.store)
    y_pred = clf.predict(prep.test)
    elapsed = time.perf_counter() - t0
    y_true = np.array([c.label for c in prep.test])
    report = evaluate_predictions(y_true, y_pred, [c.window_start for c in prep.test])
    cls = modality_classes(prep, prep.test)
    modality = {}
    for name, k in (("log_silent", 1), ("metric_silent", 2), ("dual", 3)):
        sel = cls == k
        modality[name] = float(y_pred[sel].mean()) if sel.any() else float("nan")
    return RunResult(variant, seed, prep.T, semi, report, y_pred, y_true, elapsed, modality, clf)
