"""Deterministic fault-injection telemetry synthesizer with exact ground truth.

A corpus is a 1 Hz metric grid plus log lines on one clock. Workload runs
produce the normal data; faults change metrics and/or logs according to their
manifestation rules, and the per-second truth records exactly where a change
was applied (a tolerated fault changes nothing and stays normal).
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import Chunk, LabelSelector, MetricFrame, ProvenanceRecord, RawLogRecord, attach_provenance, partition_chunks
from .exceptions import ConfigError, DataError, OverlappingFaults
from .model.metric_encoder import AspectMap

EPOCH0_MS = 1_600_000_000_000
MS = 1000

METRIC_EFFECTS = ("steep_rise", "jitter", "sudden_drop", "drop_and_restore", "plummet_to_zero", "none")
LOG_EFFECTS = ("warning_burst", "error_burst", "silent")
CATEGORIES = ("process_suspension", "process_kill", "resource_stress", "network_fault")

PHASE_ACTIVE, PHASE_QUIET, PHASE_IDLE = 0, 1, 2


@dataclass(frozen=True)
class MetricBaseline:
    level: float
    noise: float = 1.0
    trend: float = 0.0
    period: float = 0.0
    amplitude: float = 0.0

    def __post_init__(self):
        if self.noise < 0:
            raise ConfigError("noise scale must be >= 0")


@dataclass(frozen=True)
class BenignEvent:
    """A normal burst of activity: optional metric rise on ``aspects`` plus its own log line."""

    name: str
    template: str
    aspects: tuple = ()
    duration: tuple = (10, 25)
    rate: float = 0.3
    per_run: int = 1


@dataclass(frozen=True)
class WorkloadProfile:
    name: str
    metrics: dict  # metric -> MetricBaseline, in column order
    aspects: dict  # aspect -> tuple of metric names
    templates: tuple = ()  # (template, lines per second)
    idle: dict = field(default_factory=dict)  # metric -> (level, noise) when the metric is idle
    quiet_aspects: tuple = ()
    quiet_s: int = 0
    idle_tail_s: int = 0
    start_templates: tuple = ()
    end_templates: tuple = ()
    idle_templates: tuple = ()
    benign: tuple = ()

    def __post_init__(self):
        for name, rate in self.templates + self.idle_templates:
            if rate < 0:
                raise ConfigError(f"negative emission rate for {name!r}")
        for aspect, ms in self.aspects.items():
            if not ms:
                raise ConfigError(f"aspect {aspect!r} has no metrics")
            for m in ms:
                if m not in self.metrics:
                    raise ConfigError(f"aspect {aspect!r} names unknown metric {m!r}")

    @property
    def metric_names(self) -> list:
        return list(self.metrics)


@dataclass(frozen=True)
class FaultSpec:
    fault_id: str
    category: str
    duration: int = 60
    metric_effect: str = "none"
    aspects: tuple = ()
    log_effect: str = "silent"
    log_templates: tuple = ()
    log_rate: float = 1.0
    tolerance_prob: float = 0.2
    magnitude: Optional[float] = None  # rise in sigmas / jitter amplification / dip fraction

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ConfigError(f"unknown fault category {self.category!r}")
        if self.metric_effect not in METRIC_EFFECTS or self.log_effect not in LOG_EFFECTS:
            raise ConfigError(f"unknown effect rule in fault {self.fault_id!r}")
        if self.duration <= 0:
            raise ConfigError("fault duration must be positive")
        if self.metric_effect == "none" and self.log_effect == "silent":
            raise ConfigError(f"fault {self.fault_id!r} has no manifestation at all")
        if self.log_effect != "silent" and not self.log_templates:
            raise ConfigError(f"fault {self.fault_id!r} needs anomalous log templates")

    @property
    def log_silent(self) -> bool:
        return self.log_effect == "silent"

    @property
    def metric_silent(self) -> bool:
        # a plummet to idle level looks exactly like a normal idle stretch
        return self.metric_effect in ("none", "plummet_to_zero")

    def effect_magnitude(self) -> float:
        if self.magnitude is not None:
            return self.magnitude
        return {"steep_rise": 4.0, "jitter": 6.0, "sudden_drop": 0.1, "drop_and_restore": 0.1}.get(self.metric_effect, 0.0)


@dataclass(frozen=True)
class FaultRecord:
    instance_id: str
    spec: FaultSpec
    start_s: int
    end_s: int
    tolerated: bool
    metric_seconds: int
    log_lines: int


@dataclass(eq=False)
class SynthCorpus:
    logs: list
    metrics: MetricFrame
    provenance: list
    truth: np.ndarray  # per second: manifestation active
    metric_truth: np.ndarray
    log_truth: np.ndarray
    aspects: dict
    sigma: np.ndarray
    idle_level: np.ndarray
    idle_noise: np.ndarray
    phase: np.ndarray
    log_kinds: list  # per log record: "normal", "benign:<name>" or a fault instance id
    faults: list = field(default_factory=list)
    benign_windows: list = field(default_factory=list)  # (start_s, end_s, name)
    t0_ms: int = EPOCH0_MS

    @property
    def length_s(self) -> int:
        return len(self.truth)

    @property
    def aspect_map(self) -> AspectMap:
        return AspectMap.from_dict(self.aspects)

    def second_of(self, ts_ms: int) -> int:
        return (ts_ms - self.t0_ms) // MS

    def anomalous_line_count(self, instance_id: Optional[str] = None) -> int:
        if instance_id is None:
            return sum(1 for k in self.log_kinds if not (k == "normal" or k.startswith("benign:")))
        return sum(1 for k in self.log_kinds if k == instance_id)

    def fault_windows_ms(self) -> list:
        return [(self.t0_ms + f.start_s * MS, self.t0_ms + f.end_s * MS, f) for f in self.faults]


# -- rendering helpers ---------------------------------------------------------

def _render(template: str, rng: np.random.Generator) -> str:
    out = template
    while "{" in out:
        i = out.index("{")
        j = out.index("}", i)
        kind = out[i + 1 : j]
        if kind == "n":
            val = str(int(rng.integers(0, 5000)))
        elif kind == "f":
            val = f"{rng.uniform(0, 1000):.1f}"
        elif kind == "ip":
            val = "10.0.{}.{}".format(int(rng.integers(0, 4)), int(rng.integers(2, 250)))
        elif kind == "port":
            val = str(int(rng.integers(30000, 60000)))
        elif kind == "hex":
            val = "0x" + "".join("0123456789abcdef"[int(d)] for d in rng.integers(0, 16, size=8))
        elif kind == "path":
            val = "/data/spark/blockmgr-{}/{:02d}/shuffle_{}".format(
                int(rng.integers(100, 999)), int(rng.integers(0, 64)), int(rng.integers(0, 999))
            )
        else:
            raise ConfigError(f"unknown template placeholder {{{kind}}}")
        out = out[:i] + val + out[j + 1 :]
    return out


def _emit(seconds: np.ndarray, rate: float, templates: Sequence[str], rng, t0_ms: int, kind: str) -> tuple:
    """Poisson(rate) lines per second over ``seconds``; returns (records, kinds, seconds_with_lines)."""
    if rate <= 0 or len(seconds) == 0:
        return [], [], np.zeros(0, dtype=np.int64)
    counts = rng.poisson(rate, size=len(seconds))
    records, kinds = [], []
    for s, c in zip(seconds, counts):
        for _ in range(int(c)):
            tpl = templates[int(rng.integers(0, len(templates)))]
            ts = t0_ms + int(s) * MS + int(rng.integers(0, MS))
            records.append(RawLogRecord(ts, _render(tpl, rng)))
            kinds.append(kind)
    return records, kinds, seconds[counts > 0]


def _baseline_values(profile: WorkloadProfile, length: int, rng) -> np.ndarray:
    t = np.arange(length, dtype=np.float64)
    cols = []
    for b in profile.metrics.values():
        col = b.level + b.trend * t + b.noise * rng.standard_normal(length)
        if b.period > 0 and b.amplitude:
            phase = rng.uniform(0, 2 * np.pi)
            col = col + b.amplitude * np.sin(2 * np.pi * t / b.period + phase)
        cols.append(col)
    return np.stack(cols, axis=1)


def _idle_draw(level: np.ndarray, noise: np.ndarray, n: int, rng) -> np.ndarray:
    return np.maximum(0.0, level + noise * rng.standard_normal((n, len(level))))


def _ramp(n: int, width: int = 3) -> np.ndarray:
    return np.minimum(1.0, (np.arange(n) + 1) / width)


def _columns(aspects: dict, names: Sequence[str], wanted: Sequence[str]) -> list:
    index = {m: i for i, m in enumerate(names)}
    cols = []
    for a in wanted:
        if a not in aspects:
            raise ConfigError(f"unknown aspect {a!r}")
        cols += [index[m] for m in aspects[a]]
    return cols


def _run(profile: WorkloadProfile, length_s: int, start_s: int, rng, t0_ms: int):
    """Metrics, logs and phases for one workload run beginning at ``start_s``."""
    names = profile.metric_names
    values = _baseline_values(profile, length_s, rng)
    idle_level = np.array([profile.idle.get(m, (0.0, 0.0))[0] for m in names])
    idle_noise = np.array([profile.idle.get(m, (0.0, 0.0))[1] for m in names])
    phase = np.full(length_s, PHASE_ACTIVE, dtype=np.int8)
    idle_from = length_s - profile.idle_tail_s
    quiet_from = idle_from - profile.quiet_s
    phase[quiet_from:idle_from] = PHASE_QUIET
    phase[idle_from:] = PHASE_IDLE
    if profile.quiet_s:
        qcols = _columns(profile.aspects, names, profile.quiet_aspects)
        draw = _idle_draw(idle_level[qcols], idle_noise[qcols], profile.quiet_s, rng)
        values[quiet_from:idle_from, qcols] = draw
    if profile.idle_tail_s:
        values[idle_from:] = _idle_draw(idle_level, idle_noise, profile.idle_tail_s, rng)

    seconds = start_s + np.arange(length_s)
    logs, kinds = [], []
    for tpl, rate in profile.templates:
        r, k, _ = _emit(seconds[:idle_from], rate, [tpl], rng, t0_ms, "normal")
        logs += r
        kinds += k
    for tpl in profile.start_templates:
        logs.append(RawLogRecord(t0_ms + int(seconds[0]) * MS + int(rng.integers(0, MS)), _render(tpl, rng)))
        kinds.append("normal")
    if profile.idle_tail_s:
        for tpl in profile.end_templates:
            logs.append(RawLogRecord(t0_ms + int(seconds[idle_from]) * MS + int(rng.integers(0, MS)), _render(tpl, rng)))
            kinds.append("normal")
        for tpl, rate in profile.idle_templates:
            r, k, _ = _emit(seconds[idle_from:], rate, [tpl], rng, t0_ms, "normal")
            logs += r
            kinds += k

    benign = []
    sigma = np.array([b.noise for b in profile.metrics.values()])
    taken = []
    for ev in profile.benign:
        for _ in range(ev.per_run):
            for _attempt in range(50):
                dur = int(rng.integers(ev.duration[0], ev.duration[1] + 1))
                lo, hi = 20, quiet_from - dur - 5
                if hi <= lo:
                    break
                s = int(rng.integers(lo, hi))
                if all(s + dur + 10 <= a or s >= b + 10 for a, b in taken):
                    break
            else:
                continue
            if hi <= lo:
                continue
            taken.append((s, s + dur))
            if ev.aspects:
                cols = _columns(profile.aspects, names, ev.aspects)
                values[s : s + dur, cols] += 4.0 * sigma[cols] * _ramp(dur)[:, None]
            first = RawLogRecord(t0_ms + int(seconds[s]) * MS + int(rng.integers(0, MS)), _render(ev.template, rng))
            r, k, _ = _emit(seconds[s + 1 : s + dur], ev.rate, [ev.template], rng, t0_ms, f"benign:{ev.name}")
            logs += [first] + r
            kinds += [f"benign:{ev.name}"] + k
            benign.append((start_s + s, start_s + s + dur, ev.name))
    return values, logs, kinds, phase, benign, idle_level, idle_noise, sigma


def _assemble(parts, profiles, run_lengths, t0_ms, workload_ids) -> SynthCorpus:
    values = np.concatenate([p[0] for p in parts])
    logs, kinds = [], []
    for p in parts:
        logs += p[1]
        kinds += p[2]
    order = sorted(range(len(logs)), key=lambda i: logs[i].timestamp)
    logs = [logs[i] for i in order]
    kinds = [kinds[i] for i in order]
    length = len(values)
    names = profiles[0].metric_names
    provenance = []
    start = 0
    for wid, n in zip(workload_ids, run_lengths):
        provenance.append(ProvenanceRecord(t0_ms + start * MS, t0_ms + (start + n) * MS, None, wid))
        start += n
    frame = MetricFrame(t0_ms + MS * np.arange(length, dtype=np.int64), values, tuple(names))
    zeros = np.zeros(length, dtype=bool)
    return SynthCorpus(
        logs=logs, metrics=frame, provenance=provenance, truth=zeros.copy(), metric_truth=zeros.copy(),
        log_truth=zeros.copy(), aspects={a: tuple(ms) for a, ms in profiles[0].aspects.items()},
        sigma=parts[0][7], idle_level=parts[0][5], idle_noise=parts[0][6],
        phase=np.concatenate([p[3] for p in parts]), log_kinds=kinds,
        benign_windows=[w for p in parts for w in p[4]], t0_ms=t0_ms,
    )


def gen_baseline(profile: WorkloadProfile, length_s: int, seed: int, t0_ms: int = EPOCH0_MS) -> SynthCorpus:
    """Fault-free telemetry for one workload run (truth all zero)."""
    if length_s < 60:
        raise ConfigError("baseline needs at least 60 seconds")
    rng = np.random.default_rng([seed, 0])
    part = _run(profile, length_s, 0, rng, t0_ms)
    return _assemble([part], [profile], [length_s], t0_ms, [f"{profile.name}#0"])


def gen_schedule(profiles: Sequence[WorkloadProfile], run_length_s: int, seed: int, t0_ms: int = EPOCH0_MS) -> SynthCorpus:
    """Consecutive fault-free runs, one per entry of ``profiles``."""
    names = profiles[0].metric_names
    for p in profiles:
        if p.metric_names != names:
            raise ConfigError("all workload profiles must share one metric layout")
    parts, wids, seen = [], [], {}
    for r, p in enumerate(profiles):
        rng = np.random.default_rng([seed, r])
        parts.append(_run(p, run_length_s, r * run_length_s, rng, t0_ms))
        k = seen.get(p.name, 0)
        seen[p.name] = k + 1
        wids.append(f"{p.name}#{k}")
    return _assemble(parts, profiles, [run_length_s] * len(profiles), t0_ms, wids)


def _workload_at(corpus: SynthCorpus, second: int) -> Optional[str]:
    ts = corpus.t0_ms + second * MS
    for p in corpus.provenance:
        if p.fault_id is None and p.ts_start <= ts < p.ts_end:
            return p.workload_id
    return None


def inject_fault(corpus: SynthCorpus, spec: FaultSpec, start_s: int, seed: int, instance_id: Optional[str] = None) -> SynthCorpus:
    """Return a copy of ``corpus`` with one fault applied at ``start_s``."""
    end_s = start_s + spec.duration
    if start_s < 0 or end_s > corpus.length_s:
        raise DataError(f"fault window [{start_s}, {end_s}) does not fit a {corpus.length_s} s corpus")
    for f in corpus.faults:
        if start_s < f.end_s and f.start_s < end_s:
            raise OverlappingFaults(f"{spec.fault_id} at {start_s} overlaps {f.instance_id}")
    if instance_id is None:
        instance_id = f"{spec.fault_id}#{sum(f.spec.fault_id == spec.fault_id for f in corpus.faults)}"
    rng = np.random.default_rng([seed, start_s, 7919])
    out = copy.copy(corpus)
    values = corpus.metrics.values.copy()
    metric_truth = corpus.metric_truth.copy()
    log_truth = corpus.log_truth.copy()
    logs, kinds = list(corpus.logs), list(corpus.log_kinds)
    tolerated = bool(rng.random() < spec.tolerance_prob)
    n = spec.duration
    metric_seconds = 0
    n_lines = 0
    if not tolerated:
        names = corpus.metrics.metric_names
        cols = _columns(corpus.aspects, names, spec.aspects) if spec.metric_effect != "none" else []
        win = slice(start_s, end_s)
        mag = spec.effect_magnitude()
        active = np.ones(n, dtype=bool)
        sig = corpus.sigma[cols]
        if spec.metric_effect == "steep_rise":
            values[win, cols] += mag * sig * _ramp(n)[:, None]
        elif spec.metric_effect == "jitter":
            sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)[:, None]
            values[win, cols] += sign * mag * sig * rng.uniform(0.5, 1.0, size=(n, len(cols)))
        elif spec.metric_effect == "sudden_drop":
            values[win, cols] *= mag
        elif spec.metric_effect == "drop_and_restore":
            active = (np.arange(n) % 8) < 3
            seg = values[win, cols]
            seg[active] *= mag
            values[win, cols] = seg
        elif spec.metric_effect == "plummet_to_zero":
            values[win, cols] = _idle_draw(corpus.idle_level[cols], corpus.idle_noise[cols], n, rng)
        else:
            active = np.zeros(n, dtype=bool)
        metric_truth[win] |= active
        metric_seconds = int(active.sum())
        if not spec.log_silent:
            recs, ks, secs = _emit(np.arange(start_s, end_s), spec.log_rate, spec.log_templates, rng, corpus.t0_ms, instance_id)
            logs += recs
            kinds += ks
            log_truth[secs] = True
            n_lines = len(recs)
        order = sorted(range(len(logs)), key=lambda i: logs[i].timestamp)
        logs = [logs[i] for i in order]
        kinds = [kinds[i] for i in order]
    out.metrics = MetricFrame(corpus.metrics.timestamps, values, corpus.metrics.metric_names)
    out.metric_truth = metric_truth
    out.log_truth = log_truth
    out.truth = metric_truth | log_truth
    out.logs, out.log_kinds = logs, kinds
    out.provenance = list(corpus.provenance) + [
        ProvenanceRecord(corpus.t0_ms + start_s * MS, corpus.t0_ms + end_s * MS, instance_id, _workload_at(corpus, start_s))
    ]
    out.faults = list(corpus.faults) + [FaultRecord(instance_id, spec, start_s, end_s, tolerated, metric_seconds, n_lines)]
    return out


def truth_labels(corpus: SynthCorpus, chunks: Sequence[Chunk]) -> list:
    """1 iff the chunk window overlaps at least one manifestation-active second."""
    active = np.flatnonzero(corpus.truth)
    labels = []
    for c in chunks:
        lo = (c.window_start - corpus.t0_ms) // MS
        hi = -(-(c.window_end - corpus.t0_ms) // MS)
        i = np.searchsorted(active, lo)
        labels.append(int(i < len(active) and active[i] < hi))
    return labels


def emit_labels(corpus: SynthCorpus, T: int, stride: Optional[int] = None, parser=None) -> list:
    """Chunk the corpus, attach human (ground-truth) labels and provenance tags."""
    chunks = partition_chunks(corpus.logs, corpus.metrics, T, stride, parser=parser)
    chunks = attach_provenance(chunks, corpus.provenance)
    return [c.with_label(y, "human") for c, y in zip(chunks, truth_labels(corpus, chunks))]


def chunk_manifestations(corpus: SynthCorpus, chunk: Chunk) -> dict:
    """Which modalities visibly manifest an anomaly inside the chunk window.

    Metric changes from metric-silent rules (plummet to idle) do not count as visible.
    """
    lo = (chunk.window_start - corpus.t0_ms) // MS
    hi = -(-(chunk.window_end - corpus.t0_ms) // MS)
    metric = log = False
    for f in corpus.faults:
        a, b = max(lo, f.start_s), min(hi, f.end_s)
        if a >= b or f.tolerated:
            continue
        if not f.spec.metric_silent and corpus.metric_truth[a:b].any():
            metric = True
        if corpus.log_truth[a:b].any():
            log = True
    return {"metric": metric, "log": log}


# -- the standard acceptance suite ---------------------------------------------------

ASPECTS = {
    "cpu": ("cpu_user", "cpu_system", "cpu_iowait"),
    "memory": ("mem_used", "mem_cache"),
    "io": ("io_rkbs", "io_wkbs"),
    "network": ("net_rx", "net_tx"),
}
_BASE = {
    "cpu_user": (45.0, 3.0), "cpu_system": (12.0, 1.2), "cpu_iowait": (6.0, 0.8),
    "mem_used": (55.0, 2.0), "mem_cache": (25.0, 1.5),
    "io_rkbs": (300.0, 25.0), "io_wkbs": (200.0, 20.0),
    "net_rx": (120.0, 10.0), "net_tx": (90.0, 8.0),
}
_IDLE = {
    "cpu_user": (2.0, 0.5), "cpu_system": (1.0, 0.3), "cpu_iowait": (0.5, 0.2),
    "mem_used": (20.0, 1.0), "mem_cache": (10.0, 0.8),
    "io_rkbs": (0.0, 2.0), "io_wkbs": (0.0, 2.0),
    "net_rx": (0.0, 1.5), "net_tx": (0.0, 1.5),
}
# two workload categories; members share a template vocabulary and sit close
# to their category's levels (offsets in noise units, by aspect)
CATEGORY_OFFSETS = {
    "batch": {"cpu": -0.5, "memory": 0.0, "io": 1.0, "network": 0.5},
    "iterative": {"cpu": 1.0, "memory": 0.5, "io": -0.5, "network": -0.5},
}
CATEGORY_PERIOD_BASE = {"batch": 0, "iterative": 1}
WORKLOADS = {
    # name: (category, within-category offset in noise units, template rate scale)
    "wordcount": ("batch", 0.0, 1.0),
    "kmeans": ("iterative", 0.0, 1.0),
    "sort": ("batch", 0.0, 0.95),
    "pagerank": ("iterative", 0.0, 1.05),
    "terasort": ("batch", 0.0, 1.05),
    "bayes": ("iterative", 0.0, 0.95),
}
_COMMON_TEMPLATES = (
    ("INFO Running task {n}.0 in stage {n}.0 (TID {n})", 0.6),
    ("INFO Finished task {n}.0 in stage {n}.0 (TID {n}) in {n} ms on {ip} (executor {n}) ({n}/{n})", 0.6),
    ("INFO Got assigned task {n}", 0.3),
    ("INFO Block broadcast_{n} stored as values in memory (estimated size {f} KB, free {f} MB)", 0.2),
)
_CATEGORY_TEMPLATES = {
    "batch": (
        ("INFO Reading input split {path}:{n}+{n}", 0.2),
        ("INFO Sorting {n} records in memory before spill", 0.1),
        ("INFO Writing partitioned shuffle output to {path}", 0.1),
    ),
    "iterative": (
        ("INFO Computing cluster centers for {n} points", 0.1),
        ("INFO Iteration {n} finished with cost {f}", 0.1),
        ("INFO Updating ranks for {n} vertices in partition {n}", 0.2),
    ),
}
HEARTBEAT_TIMEOUT = "WARN Executor heartbeat timed out after {n} ms"


def standard_profiles(quiet_s: int = 45, idle_tail_s: int = 45) -> list:
    profiles = []
    for w, (category, shift, scale) in WORKLOADS.items():
        offsets = CATEGORY_OFFSETS[category]
        metrics = {}
        for k, (aspect, ms) in enumerate(ASPECTS.items()):
            for j, m in enumerate(ms):
                level, noise = _BASE[m]
                metrics[m] = MetricBaseline(
                    level=level + (offsets[aspect] + shift) * noise, noise=noise,
                    period=60.0 + 30.0 * ((k + j + CATEGORY_PERIOD_BASE[category]) % 4), amplitude=0.8 * noise,
                )
        templates = tuple((t, r * scale) for t, r in _COMMON_TEMPLATES + _CATEGORY_TEMPLATES[category])
        profiles.append(
            WorkloadProfile(
                name=w, metrics=metrics, aspects=dict(ASPECTS), templates=templates, idle=dict(_IDLE),
                quiet_aspects=("io", "network"), quiet_s=quiet_s, idle_tail_s=idle_tail_s,
                start_templates=(
                    "INFO Submitting application application_{n}_{n} to ResourceManager",
                    "INFO Started executor {n} on host {ip}",
                    "INFO Started executor {n} on host {ip}",
                ),
                end_templates=(
                    "INFO Final app status: SUCCEEDED, exitCode: 0",
                    "INFO Shutdown hook called",
                    "INFO Deleting directory {path}",
                ),
                idle_templates=(("INFO Removed broadcast_{n}_piece0 on {ip}:{port} in memory", 0.1),),
                benign=(
                    BenignEvent("spill", "INFO Spilling in-memory map of {n} MB to disk ({n} times so far)", ("io",), (10, 25), 0.3),
                    BenignEvent("heartbeat", HEARTBEAT_TIMEOUT, (), (5, 10), 0.4),
                ),
            )
        )
    return profiles


def standard_faults() -> list:
    """Eight fault types: three log-silent, one metric-silent, four manifesting in both."""
    return [
        FaultSpec("cpu_stress", "resource_stress", metric_effect="steep_rise", aspects=("cpu",)),
        FaultSpec(
            "memory_stress", "resource_stress", metric_effect="steep_rise", aspects=("memory",),
            log_effect="warning_burst",
            log_templates=(
                "WARN Container {n} is running beyond physical memory limits. Current usage: {n} GB of {n} GB physical memory used",
                "WARN Memory usage reached {n} percent of limit on executor {n}",
            ),
        ),
        FaultSpec(
            "disk_io_latency", "resource_stress", metric_effect="steep_rise", aspects=("io",),
            log_effect="warning_burst",
            log_templates=("WARN Slow ReadProcessor read fields took {n}ms (threshold={n}ms)", "WARN Slow BlockReceiver write data to disk cost {n}ms"),
        ),
        FaultSpec(
            "disk_full", "resource_stress", metric_effect="sudden_drop", aspects=("io",),
            log_effect="error_burst",
            log_templates=("ERROR No space left on device while writing {path}", "ERROR DiskChecker failed to write block blk_{n}"),
        ),
        FaultSpec("network_flash", "network_fault", metric_effect="drop_and_restore", aspects=("network",)),
        FaultSpec(
            "network_latency", "network_fault", metric_effect="sudden_drop", aspects=("network",),
            log_effect="warning_burst",
            log_templates=(HEARTBEAT_TIMEOUT, "WARN Issue communicating with driver in heartbeater"),
        ),
        FaultSpec("packet_loss", "network_fault", metric_effect="jitter", aspects=("network",)),
        FaultSpec(
            "datanode_kill", "process_kill", metric_effect="plummet_to_zero", aspects=("io", "network"),
            log_effect="error_burst", log_rate=1.5,
            log_templates=(
                "ERROR Excluding datanode DatanodeInfoWithStorage[{ip}:{port}]",
                "ERROR Failed to connect to {ip}:{port} for block blk_{n}, add to deadNodes and continue",
            ),
        ),
    ]


@dataclass(frozen=True)
class SuiteConfig:
    hours: float = 3.0
    run_length_s: int = 300
    faults_per_run: int = 1
    quiet_s: int = 45
    idle_tail_s: int = 45
    fault_align_s: int = 5
    tolerance_prob: float = 0.2


def standard_suite(seed: int, config: SuiteConfig = SuiteConfig()) -> SynthCorpus:
    """Workload runs cycling through six profiles (categories alternating) with eight fault types
    injected in seeded round-robin blocks."""
    profiles = standard_profiles(config.quiet_s, config.idle_tail_s)
    n_runs = int(round(config.hours * 3600 / config.run_length_s))
    schedule = [profiles[r % len(profiles)] for r in range(n_runs)]
    corpus = gen_schedule(schedule, config.run_length_s, seed)
    specs = [replace(s, tolerance_prob=config.tolerance_prob) for s in standard_faults()]
    rng = np.random.default_rng([seed, 104729])
    # complete blocks at both ends: early labeled instances and the held-out tail see every type
    n_slots = n_runs * config.faults_per_run
    order = []
    while len(order) < n_slots - len(specs):
        order += list(rng.permutation(len(specs)))
    order = order[: max(n_slots - len(specs), 0)] + list(rng.permutation(len(specs)))
    slot = 0
    for r in range(n_runs):
        p = schedule[r]
        run0 = r * config.run_length_s
        quiet_from = config.run_length_s - p.idle_tail_s - p.quiet_s
        taken = [(a - run0, b - run0) for a, b, _ in corpus.benign_windows if run0 <= a < run0 + config.run_length_s]
        for _ in range(config.faults_per_run):
            spec = specs[order[slot]]
            slot += 1
            choices = [
                s for s in range(config.fault_align_s, quiet_from - spec.duration + 1, config.fault_align_s)
                if all(s + spec.duration + 5 <= a or s >= b + 5 for a, b in taken)
            ]
            if not choices:
                continue
            s = int(choices[int(rng.integers(0, len(choices)))])
            taken.append((s, s + spec.duration))
            corpus = inject_fault(corpus, spec, run0 + s, seed)
    return corpus


def standard_selector(corpus: SynthCorpus, labeled_runs: Sequence[str] = ("wordcount#0", "kmeans#0")) -> LabelSelector:
    """Label one representative run per workload category plus the first manifesting instance of every fault type."""
    first = {}
    for f in sorted(corpus.faults, key=lambda f: f.start_s):
        if not f.tolerated:
            first.setdefault(f.spec.fault_id, f.instance_id)
    return LabelSelector(frozenset(labeled_runs), frozenset(first.values()))


def write_corpus(corpus: SynthCorpus, out_dir, T: int = 10, stride: Optional[int] = None) -> dict:
    """Write logs.jsonl, metrics.csv, provenance.csv, labels.csv and aspects.json."""
    from . import io as hio

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "logs": out / "logs.jsonl",
        "metrics": out / "metrics.csv",
        "provenance": out / "provenance.csv",
        "labels": out / "labels.csv",
        "aspects": out / "aspects.json",
    }
    hio.write_logs(paths["logs"], corpus.logs)
    hio.write_metrics(paths["metrics"], corpus.metrics)
    hio.write_provenance(paths["provenance"], corpus.provenance)
    from .data import Chunk as _Chunk

    T_ms = T * MS
    stride_ms = (stride or T) * MS
    rows = []
    n = corpus.length_s
    starts = range(0, (n - T) * MS + 1, stride_ms)
    windows = [_Chunk(f"w{s}", corpus.t0_ms + s, T_ms, (), np.zeros((T, 1))) for s in starts]
    for w, y in zip(windows, truth_labels(corpus, windows)):
        rows.append((w.window_start, y))
    hio.write_labels(paths["labels"], rows)
    hio.write_aspect_map(paths["aspects"], corpus.aspect_map)
    return paths
