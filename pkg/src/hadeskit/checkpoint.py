"""Single-file model checkpoints: a JSON manifest followed by little-endian float32 blobs.

Layout::

    b"HADESKIT" | u32 format version | u64 manifest length | manifest (UTF-8 JSON) | blobs

The manifest is serialized with sorted keys and no whitespace, and blobs are
written in manifest order, so save -> load -> save reproduces the same bytes.
"""
from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np
import torch

from .embeddings import EmbeddingTable
from .estimator import HadesClassifier
from .exceptions import ConfigError, DataError, ShapeError
from .features import ChunkFeaturizer
from .model.metric_encoder import AspectMap
from .model.network import ArchConfig, ablation_config
from .parsing import TemplateStore

MAGIC = b"HADESKIT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIQ")

_PARAMS = (
    "variant", "lr", "batch_size", "epochs_phase1", "epochs_phase2", "mix_weight",
    "confidence_threshold", "semi_supervised", "embed_epochs", "embed_window", "seed",
)


def _f32(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype="<f4"))


def _collect(model: HadesClassifier):
    """(manifest, [(name, float32 array)]) describing a fitted classifier."""
    feat = model.featurizer_
    tensors = []
    for k, net in enumerate(model.nets_):
        for name, t in net.state_dict().items():
            tensors.append((f"net{k}.{name}", _f32(t.detach().cpu().numpy())))
    featurizer = {
        "L_max": feat.L_max,
        "semantic": feat.semantic,
        "metric_names": list(feat.metric_names_),
        "aspect_map": [[a, list(ms)] for a, ms in feat.aspect_map_.aspects],  # ordered; keys get sorted
        "metric_mean": [float(x) for x in feat.metric_mean_],
        "metric_std": [float(x) for x in feat.metric_std_],
        "log_dim": int(feat.log_dim_),
    }
    if feat.semantic:
        emb = feat.embeddings_
        featurizer["embeddings"] = {
            "dim": emb.dim, "n_min": emb.n_min, "n_max": emb.n_max,
            "tokens": list(emb.token_vectors), "subwords": list(emb.subword_vectors),
        }
        for key, table in (("tokens", emb.token_vectors), ("subwords", emb.subword_vectors)):
            mat = np.stack(list(table.values())) if table else np.zeros((0, emb.dim))
            tensors.append((f"embeddings.{key}", _f32(mat)))
    else:
        featurizer["n_events"] = int(feat.n_events_)
    store = model.templates_
    manifest = {
        "format_version": FORMAT_VERSION,
        "params": {k: getattr(model, k) for k in _PARAMS},
        "arch": model.arch_.to_dict(),
        "n_nets": len(model.nets_),
        "featurizer": featurizer,
        "templates": {
            "sim_threshold": store.sim_threshold, "max_depth": store.max_depth,
            "keep_classes": store.keep_classes, "records": store.to_records(),
            "digest": store.digest(),
        },
    }
    return manifest, tensors


def to_bytes(model: HadesClassifier) -> bytes:
    manifest, tensors = _collect(model)
    offset = 0
    entries = []
    for name, arr in tensors:
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": arr.nbytes})
        offset += arr.nbytes
    manifest["tensors"] = entries
    body = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(MAGIC, FORMAT_VERSION, len(body)) + body + b"".join(a.tobytes() for _, a in tensors)


def save(model: HadesClassifier, path) -> str:
    """Write the checkpoint; returns its sha256 hex digest."""
    data = to_bytes(model)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_manifest(data: bytes):
    if len(data) < _HEADER.size:
        raise DataError("checkpoint is truncated")
    magic, version, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DataError("not a checkpoint file")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint format version {version}")
    manifest = json.loads(data[_HEADER.size : _HEADER.size + n].decode("utf-8"))
    return manifest, _HEADER.size + n


def from_bytes(data: bytes) -> HadesClassifier:
    manifest, base = read_manifest(data)
    blobs = {}
    for e in manifest["tensors"]:
        start = base + e["offset"]
        if start + e["nbytes"] > len(data):
            raise DataError(f"checkpoint blob {e['name']} is truncated")
        arr = np.frombuffer(data, dtype="<f4", count=e["nbytes"] // 4, offset=start)
        blobs[e["name"]] = arr.reshape(e["shape"])

    t = manifest["templates"]
    store = TemplateStore.from_records(t["records"], t["sim_threshold"], t["max_depth"], t["keep_classes"])
    if store.digest() != t["digest"]:
        raise DataError("template store does not match its recorded digest")

    f = manifest["featurizer"]
    amap = AspectMap(tuple((a, tuple(ms)) for a, ms in f["aspect_map"]))
    arch = ArchConfig.from_dict(manifest["arch"])
    params = manifest["params"]
    model = HadesClassifier(amap, f["metric_names"], arch=arch, **params)
    feat = ChunkFeaturizer(
        amap, f["metric_names"], L_max=f["L_max"], semantic=f["semantic"], embed_dim=arch.embed_dim,
        embed_window=params["embed_window"], embed_epochs=params["embed_epochs"], seed=params["seed"],
    )
    feat.templates_ = store
    feat.metric_names_ = list(f["metric_names"])
    feat.aspect_map_ = amap
    feat.groups_ = amap.column_indices(feat.metric_names_)
    feat.metric_mean_ = np.array(f["metric_mean"], dtype=np.float64)
    feat.metric_std_ = np.array(f["metric_std"], dtype=np.float64)
    feat.log_dim_ = f["log_dim"]
    if f["semantic"]:
        e = f["embeddings"]
        tok = blobs["embeddings.tokens"].astype(np.float64)
        sub = blobs["embeddings.subwords"].astype(np.float64)
        feat.embeddings_ = EmbeddingTable(
            e["dim"], dict(zip(e["tokens"], tok)), dict(zip(e["subwords"], sub)), e["n_min"], e["n_max"]
        )
    else:
        feat.embeddings_ = None
        feat.n_events_ = f["n_events"]
    feat._cache = {}

    model.arch_ = arch
    model.wiring_ = ablation_config(params["variant"])
    model.featurizer_ = feat
    model.templates_ = store
    model.classes_ = np.array([0, 1])
    model.history_, model.pseudo_ = [], []
    model.nets_ = []
    for k, variant in enumerate(model._sub_variants()):
        net = model.build_network(variant, feat)
        state = net.state_dict()
        loaded = {}
        for name, ref in state.items():
            key = f"net{k}.{name}"
            if key not in blobs:
                raise DataError(f"checkpoint lacks tensor {key}")
            if tuple(blobs[key].shape) != tuple(ref.shape):
                raise ShapeError(f"{key}: checkpoint shape {blobs[key].shape} does not match the configured {tuple(ref.shape)}")
            loaded[name] = torch.from_numpy(blobs[key].copy()).to(ref.dtype)
        net.load_state_dict(loaded)
        net.eval()
        model.nets_.append(net)
    if len(model.nets_) != manifest["n_nets"]:
        raise ConfigError("variant and stored network count disagree")
    return model


def load(path) -> HadesClassifier:
    return from_bytes(Path(path).read_bytes())


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
