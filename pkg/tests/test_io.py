import numpy as np
import pytest

from hadeskit import io as hio
from hadeskit.data import MetricFrame, ProvenanceRecord, RawLogRecord
from hadeskit.exceptions import DataError, EmptyInput
from hadeskit.model.metric_encoder import AspectMap


def test_log_round_trip_keeps_unicode_and_order(tmp_path):
    logs = [RawLogRecord(1000, "INFO started"), RawLogRecord(1000, "WARN naïve, \"quoted\""), RawLogRecord(2500, "x")]
    hio.write_logs(tmp_path / "l.jsonl", logs)
    assert hio.read_logs(tmp_path / "l.jsonl") == logs


def test_bad_log_record_names_the_line(tmp_path):
    p = tmp_path / "l.jsonl"
    p.write_text('{"ts": 1, "msg": "ok"}\n\n{"ts": "soon", "msg": "bad"}\n')
    with pytest.raises(DataError, match=":3:"):
        hio.read_logs(p)
    p.write_text('{"msg": "no ts"}\n')
    with pytest.raises(DataError):
        hio.read_logs(p)


def test_metric_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    frame = MetricFrame(np.arange(5, dtype=np.int64) * 1000, rng.normal(size=(5, 3)), ("a", "b", "c"))
    hio.write_metrics(tmp_path / "m.csv", frame)
    back = hio.read_metrics(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.values, frame.values)
    np.testing.assert_array_equal(back.timestamps, frame.timestamps)
    assert tuple(back.metric_names) == ("a", "b", "c")


def test_irregular_metrics_carry_last_observation_forward(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("ts,a,b\n0,1,\n1000,2,5\n3000,,7\n4000,4,8\n")
    frame = hio.read_metrics(p)
    assert frame.timestamps.tolist() == [0, 1000, 2000, 3000, 4000]
    assert frame.values[:, 0].tolist() == [1, 2, 2, 2, 4]
    assert frame.values[:, 1].tolist() == [5, 5, 5, 7, 8]  # leading gap takes the first observation


def test_bad_metric_files(tmp_path):
    p = tmp_path / "m.csv"
    for text in ("", "time,a\n0,1\n", "ts,a\n0,1,2\n", "ts,a\n0,abc\n"):
        p.write_text(text)
        with pytest.raises(DataError):
            hio.read_metrics(p)
    p.write_text("ts,a\n0,1\n")
    with pytest.raises(EmptyInput):
        hio.read_metrics(p)


def test_label_prediction_and_provenance_round_trips(tmp_path):
    hio.write_labels(tmp_path / "y.csv", [(0, 1), (10_000, 0)])
    assert hio.read_labels(tmp_path / "y.csv") == {0: 1, 10_000: 0}
    hio.write_predictions(tmp_path / "p.csv", [(0, 1, 0.9876543), (10_000, 0, 0.5)])
    assert hio.read_predictions(tmp_path / "p.csv") == [(0, 1, 0.987654), (10_000, 0, 0.5)]
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "chunk_window_start,label,confidence"
    prov = [ProvenanceRecord(0, 5000, "cpu_stress#0", "wordcount#0"), ProvenanceRecord(5000, 9000, None, None)]
    hio.write_provenance(tmp_path / "v.csv", prov)
    assert hio.read_provenance(tmp_path / "v.csv") == prov


def test_aspect_map_round_trip(tmp_path):
    amap = AspectMap.from_dict({"cpu": ["u", "s"], "mem": ["m"]})
    hio.write_aspect_map(tmp_path / "a.json", amap)
    assert hio.read_aspect_map(tmp_path / "a.json").to_dict() == amap.to_dict()
