import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hadeskit.data import (
    Chunk,
    DatasetSplit,
    LabelSelector,
    MetricFrame,
    ProvenanceRecord,
    RawLogRecord,
    attach_provenance,
    partition_chunks,
    regularize_metrics,
    select_labeled_subset,
    temporal_split,
)
from hadeskit.exceptions import DataError, EmptyInput, EmptySelection, InsufficientData, MissingColumn


def grid(n, m=2, delta=1000, t0=0):
    return MetricFrame(t0 + delta * np.arange(n), np.arange(n * m, dtype=float).reshape(n, m), tuple(f"m{j}" for j in range(m)))


def fixed_parser(message):
    return int(message.split()[-1])


def locf_oracle(ts, vals, delta):
    """Brute force: walk the grid and scan every sample."""
    t0 = min(ts)
    out = []
    k = 0
    while t0 + k * delta <= max(ts):
        g = t0 + k * delta
        row = []
        for j in range(len(vals[0])):
            seen = [(t, v[j]) for t, v in zip(ts, vals) if t <= g and not np.isnan(v[j])]
            if seen:
                row.append(max(seen, key=lambda p: p[0])[1])
            else:
                row.append(next(v[j] for t, v in sorted(zip(ts, vals)) if not np.isnan(v[j])))
        out.append(row)
        k += 1
    return np.array(out)


# -- records -----------------------------------------------------------------------

def test_log_record_rejects_blank_and_negative():
    with pytest.raises(DataError):
        RawLogRecord(0, "   ")
    with pytest.raises(DataError):
        RawLogRecord(-1, "x")


def test_metric_frame_requires_uniform_spacing():
    with pytest.raises(DataError):
        MetricFrame(np.array([0, 1000, 2500]), np.zeros((3, 1)), ("a",))
    with pytest.raises(DataError):
        MetricFrame(np.array([0, 1000]), np.array([[np.nan], [1.0]]), ("a",))


def test_metric_frame_select_reorders_and_reports_missing():
    f = grid(3, 3)
    sub = f.select(["m2", "m0"])
    assert sub.metric_names == ("m2", "m0")
    np.testing.assert_array_equal(sub.values, f.values[:, [2, 0]])
    with pytest.raises(MissingColumn):
        f.select(["nope"])


# -- regularize_metrics --------------------------------------------------------------

def test_regularize_already_uniform_is_identity():
    f = regularize_metrics([0, 1000, 2000], [[1.0], [2.0], [3.0]], ["a"], 1000)
    np.testing.assert_array_equal(f.timestamps, [0, 1000, 2000])
    np.testing.assert_array_equal(f.values[:, 0], [1, 2, 3])


def test_regularize_locf_drops_sample_after_last_step():
    f = regularize_metrics([0, 2500], [[1.0], [5.0]], ["a"], 1000)
    np.testing.assert_array_equal(f.timestamps, [0, 1000, 2000])
    np.testing.assert_array_equal(f.values[:, 0], [1, 1, 1])


def test_regularize_leading_gap_takes_first_observation():
    f = regularize_metrics([0, 1000, 2000], [[np.nan, 1.0], [7.0, 2.0], [8.0, np.nan]], ["a", "b"], 1000)
    np.testing.assert_array_equal(f.values, [[7, 1], [7, 2], [8, 2]])


def test_regularize_errors():
    with pytest.raises(EmptyInput):
        regularize_metrics([0], [[1.0]], ["a"], 1000)
    with pytest.raises(MissingColumn) as exc:
        regularize_metrics([0, 1000], [[1.0, np.nan], [2.0, np.nan]], ["a", "gone"], 1000)
    assert "gone" in str(exc.value)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(0, 20_000), min_size=2, max_size=12, unique=True),
    st.integers(300, 3000),
    st.data(),
)
def test_regularize_matches_brute_force_locf(ts, delta, data):
    vals = [
        [data.draw(st.one_of(st.just(np.nan), st.floats(-5, 5))) for _ in range(2)]
        for _ in ts
    ]
    for j in range(2):  # keep every column observed at least once
        vals[0][j] = 0.5 if np.isnan(vals[0][j]) else vals[0][j]
    f = regularize_metrics(ts, vals, ["a", "b"], delta)
    order = np.argsort(ts)
    np.testing.assert_array_equal(f.values, locf_oracle([ts[i] for i in order], [vals[i] for i in order], delta))
    assert np.all(np.diff(f.timestamps) == delta)


# -- partition_chunks ------------------------------------------------------------------

def test_partition_interval_membership():
    logs = [RawLogRecord(s * 1000, f"event {s}") for s in (1, 3, 12)]
    chunks = partition_chunks(logs, grid(20, 3), T=10, stride=10, parser=fixed_parser)
    assert len(chunks) == 2
    assert chunks[0].event_ids == (1, 3)
    assert chunks[1].event_ids == (12,)
    assert all(c.metric_segment.shape == (10, 3) for c in chunks)


def test_partition_without_logs():
    chunks = partition_chunks([], grid(10), T=10, stride=10)
    assert len(chunks) == 1 and chunks[0].event_ids == ()
    np.testing.assert_array_equal(chunks[0].metric_segment, grid(10).values)


def test_partition_errors():
    with pytest.raises(InsufficientData):
        partition_chunks([], grid(5), T=10)
    with pytest.raises(DataError):
        partition_chunks([], grid(20), T=10, stride=0)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(2, 60),
    st.integers(1, 12),
    st.lists(st.integers(0, 80_000), max_size=60),
)
def test_partition_tiles_grid_and_conserves_events(n, T, stamps):
    if n < T:
        return
    logs = [RawLogRecord(t, f"e {i}") for i, t in enumerate(stamps)]
    chunks = partition_chunks(logs, grid(n), T=T, parser=fixed_parser)
    assert len(chunks) == n // T
    assert [c.window_start for c in chunks] == [k * T * 1000 for k in range(n // T)]
    covered = [t for t in stamps if t < (n // T) * T * 1000]
    assert sum(len(c.event_ids) for c in chunks) == len(covered)
    for c in chunks:
        inside = [stamps[e] for e in c.event_ids]
        assert all(c.window_start <= t < c.window_end for t in inside)
        assert inside == sorted(inside)


def test_partition_stride_overlap():
    chunks = partition_chunks([], grid(20), T=10, stride=5)
    assert [c.window_start for c in chunks] == [0, 5000, 10000]


# -- temporal_split --------------------------------------------------------------------

def labeled(labels):
    return [
        Chunk(f"c{i}", i * 10_000, 10_000, (), np.zeros((10, 1)), label=y, label_source="human")
        for i, y in enumerate(labels)
    ]


def test_split_index_arithmetic():
    train, test = temporal_split(labeled([0] * 10), 0.7)
    assert [c.chunk_id for c in train] == [f"c{i}" for i in range(7)]
    assert [c.chunk_id for c in test] == ["c7", "c8", "c9"]


def test_split_shifts_cut_before_fault_run():
    train, test = temporal_split(labeled([0, 0, 0, 0, 0, 0, 1, 1, 0, 0]), 0.7)
    assert len(train) == 6 and test[0].chunk_id == "c6"


def test_split_small_inputs():
    train, test = temporal_split(labeled([0, 0, 0]), 0.7)
    assert (len(train), len(test)) == (2, 1)
    with pytest.raises(InsufficientData):
        temporal_split(labeled([0]), 0.7)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=2, max_size=40), st.floats(0.2, 0.9))
def test_split_never_leaks_or_straddles(labels, frac):
    chunks = labeled(labels)
    try:
        train, test = temporal_split(chunks, frac)
    except InsufficientData:
        return
    assert max(c.window_start for c in train) < min(c.window_start for c in test)
    assert len(train) + len(test) == len(chunks)
    assert not (train[-1].label == 1 and test[0].label == 1)


# -- provenance and label selection -------------------------------------------------

def tagged_chunks():
    prov = [
        ProvenanceRecord(0, 60_000, None, "wordcount#0"),
        ProvenanceRecord(60_000, 120_000, None, "sort#0"),
        ProvenanceRecord(10_000, 20_000, "cpu_stress#0", "wordcount#0"),
        ProvenanceRecord(70_000, 80_000, "disk_full#0", "sort#0"),
        ProvenanceRecord(90_000, 100_000, "cpu_stress#1", "sort#0"),
    ]
    chunks = partition_chunks([], grid(120), T=10)
    chunks = [c.with_label(int(any(p.fault_id and p.ts_start < c.window_end and c.window_start < p.ts_end for p in prov)), "human") for c in chunks]
    return attach_provenance(chunks, prov)


def test_attach_provenance_tags():
    chunks = tagged_chunks()
    assert chunks[0].workload_id == "wordcount#0" and chunks[0].fault_ids == ()
    assert chunks[1].fault_ids == ("cpu_stress#0",)
    assert chunks[7].workload_id == "sort#0" and chunks[7].fault_ids == ("disk_full#0",)


def test_selector_by_fault_type_recount():
    chunks = tagged_chunks()
    sel = LabelSelector(frozenset({"wordcount"}), frozenset({"cpu_stress"}))
    split = select_labeled_subset(chunks, sel)
    # oracle: filter provenance tags directly
    expected = {
        c.chunk_id for c in chunks
        if (c.fault_ids and all(f.startswith("cpu_stress#") for f in c.fault_ids))
        or (not c.fault_ids and c.workload_id.startswith("wordcount#"))
    }
    assert {c.chunk_id for c in split.train_labeled} == expected
    assert all(c.label is None and c.label_source == "none" for c in split.train_unlabeled)
    assert all(c.label_source == "human" for c in split.train_labeled)


def test_selector_instance_ids_and_everything():
    chunks = tagged_chunks()
    split = select_labeled_subset(chunks, LabelSelector(frozenset(), frozenset({"cpu_stress#1"})))
    assert [c.fault_ids for c in split.train_labeled] == [("cpu_stress#1",)]
    everything = select_labeled_subset(chunks, LabelSelector.everything())
    assert everything.train_unlabeled == [] and everything.labeled_fraction == 1.0


def test_selector_empty_selection():
    with pytest.raises(EmptySelection):
        select_labeled_subset(tagged_chunks(), LabelSelector(frozenset({"bayes"}), frozenset()))


def test_split_rejects_duplicates():
    c = labeled([0])[0]
    with pytest.raises(DataError):
        DatasetSplit([c], [c])
