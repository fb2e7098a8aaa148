import dataclasses
import sys

import pytest

from hadeskit.parsing import TemplateStore
from hadeskit.synth import emit_labels, gen_schedule, inject_fault, standard_faults, standard_profiles

TINY_ARCH = dict(
    embed_dim=8, d_model=8, n_heads=2, d_ff=16, n_layers=1, out_dim=8,
    intra_channels=[4], inter_channels=[8], head_hidden=[16], L_max=16,
)
FAST = dict(arch=TINY_ARCH, epochs_phase1=4, epochs_phase2=2, batch_size=16, embed_epochs=2)


def faults_by_id():
    return {f.fault_id: dataclasses.replace(f, tolerance_prob=0.0) for f in standard_faults()}


@pytest.fixture(scope="session")
def small_corpus():
    """Two 300 s runs with one log-silent, one metric-silent and one dual fault."""
    corpus = gen_schedule(standard_profiles()[:2], 300, seed=3)
    faults = faults_by_id()
    corpus = inject_fault(corpus, faults["cpu_stress"], 60, seed=1)
    corpus = inject_fault(corpus, faults["datanode_kill"], 150, seed=1)
    return inject_fault(corpus, faults["disk_full"], 360, seed=1)


@pytest.fixture(scope="session")
def small_chunks(small_corpus):
    store = TemplateStore()
    return store, emit_labels(small_corpus, 10, parser=store.parse_message)


@pytest.fixture(scope="session")
def tiny_model(small_corpus, small_chunks):
    from hadeskit import HadesClassifier

    store, chunks = small_chunks
    model = HadesClassifier(small_corpus.aspect_map, list(small_corpus.metrics.metric_names), semi_supervised=False, **FAST)
    return model.fit(chunks, templates=store)  # all labels known: supervised only


def pytest_terminal_summary(terminalreporter):
    lines = getattr(sys.modules.get("test_acceptance"), "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
