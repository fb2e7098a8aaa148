"""Subword-aware skip-gram token embeddings and event (template) vectors."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateVocabulary, EmptyEvent, EmptyInput, ShapeError


def char_ngrams(token: str, n_min: int = 3, n_max: int = 6) -> list:
    """Character n-grams of ``<token>`` (the bracketed whole word itself excluded)."""
    word = f"<{token}>"
    grams = []
    for n in range(n_min, n_max + 1):
        for i in range(len(word) - n + 1):
            g = word[i : i + n]
            if g != word:
                grams.append(g)
    return grams


@dataclass
class EmbeddingTable:
    dim: int
    token_vectors: dict = field(default_factory=dict)
    subword_vectors: dict = field(default_factory=dict)
    n_min: int = 3
    n_max: int = 6

    def __post_init__(self):
        for name, table in (("token", self.token_vectors), ("subword", self.subword_vectors)):
            for k, v in table.items():
                v = np.asarray(v, dtype=np.float64)
                if v.shape != (self.dim,):
                    raise ShapeError(f"{name} vector for {k!r} has shape {v.shape}, expected ({self.dim},)")
                table[k] = v

    def __contains__(self, token):
        return token in self.token_vectors

    def vector(self, token: str) -> np.ndarray:
        """Vector for a token; unseen tokens get the mean of their known n-gram vectors."""
        v = self.token_vectors.get(token)
        if v is not None:
            return v
        known = [self.subword_vectors[g] for g in char_ngrams(token, self.n_min, self.n_max) if g in self.subword_vectors]
        if not known:
            return np.zeros(self.dim)
        return np.mean(known, axis=0)

    def to_text(self) -> str:
        """Word-vector text format: ``vocab_size dim`` header, then ``token v1 ... vE``."""
        buf = io.StringIO()
        buf.write(f"{len(self.token_vectors)} {self.dim}\n")
        for tok, v in self.token_vectors.items():
            buf.write(tok + " " + " ".join(repr(float(x)) for x in v) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "EmbeddingTable":
        lines = text.strip("\n").split("\n")
        n, dim = (int(x) for x in lines[0].split())
        vectors = {}
        for line in lines[1 : n + 1]:
            parts = line.rstrip().split(" ")
            vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
        return cls(dim, vectors)


def embed_event(table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray:
    """Sentence vector of one event: the arithmetic mean of its token vectors."""
    if len(tokens) == 0:
        raise EmptyEvent("cannot embed an event with no tokens")
    return np.mean([table.vector(t) for t in tokens], axis=0)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def train_embeddings(
    corpus: Iterable[Sequence[str]],
    dim: int = 32,
    window: int = 5,
    epochs: int = 20,
    seed: int = 0,
    negative: int = 5,
    lr: float = 0.05,
    n_min: int = 3,
    n_max: int = 6,
) -> EmbeddingTable:
    """Skip-gram with negative sampling over token plus character n-gram inputs.

    The input representation of a centre token is the mean of its own input
    vector and its n-gram vectors; its update is applied to each of them.
    Deterministic for a given seed.
    """
    sentences = [list(s) for s in corpus if len(s)]
    if not sentences:
        raise EmptyInput("embedding corpus is empty")
    if dim < 2:
        raise ShapeError(f"embedding dim must be >= 2, got {dim}")
    vocab = {}
    counts = []
    for s in sentences:
        for t in s:
            if t not in vocab:
                vocab[t] = len(vocab)
                counts.append(0)
            counts[vocab[t]] += 1
    if len(vocab) < 2:
        raise DegenerateVocabulary("corpus has a single distinct token")

    grams = {}
    subwords = []
    for tok in vocab:
        ids = [vocab[tok]]
        for g in char_ngrams(tok, n_min, n_max):
            if g not in grams:
                grams[g] = len(vocab) + len(grams)
            ids.append(grams[g])
        subwords.append(np.array(ids))

    rng = np.random.default_rng(seed)
    n_in = len(vocab) + len(grams)
    w_in = rng.uniform(-1.0 / dim, 1.0 / dim, size=(n_in, dim))
    w_out = np.zeros((len(vocab), dim))
    noise = np.asarray(counts, dtype=np.float64) ** 0.75
    noise /= noise.sum()
    encoded = [np.array([vocab[t] for t in s]) for s in sentences]

    total = epochs * sum(len(s) for s in encoded)
    step = 0
    labels = np.zeros(negative + 1)
    labels[0] = 1.0
    for _ in range(epochs):
        for si in rng.permutation(len(encoded)):
            sent = encoded[si]
            for i, centre in enumerate(sent):
                alpha = lr * max(1.0 - step / max(total, 1), 1e-4)
                step += 1
                sub = subwords[centre]
                lo, hi = max(0, i - window), min(len(sent), i + window + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    h = w_in[sub].mean(axis=0)
                    targets = np.concatenate(([sent[j]], rng.choice(len(vocab), size=negative, p=noise)))
                    out = w_out[targets]
                    g = alpha * (labels - _sigmoid(out @ h))
                    grad_h = g @ out
                    np.add.at(w_out, targets, np.outer(g, h))
                    w_in[sub] += grad_h

    inv_vocab = list(vocab)
    token_vectors = {tok: w_in[subwords[i]].mean(axis=0) for i, tok in enumerate(inv_vocab)}
    subword_vectors = {g: w_in[i].copy() for g, i in grams.items()}
    return EmbeddingTable(dim, token_vectors, subword_vectors, n_min, n_max)


class EventEmbedder(TransformerMixin, BaseEstimator):
    """Fits token embeddings on template token lists and maps events to vectors."""

    def __init__(self, dim=32, window=5, epochs=20, seed=0, negative=5, lr=0.05):
        self.dim = dim
        self.window = window
        self.epochs = epochs
        self.seed = seed
        self.negative = negative
        self.lr = lr

    def fit(self, X, y=None):
        self.table_ = train_embeddings(
            X, dim=self.dim, window=self.window, epochs=self.epochs, seed=self.seed, negative=self.negative, lr=self.lr
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "table_")
        return np.stack([embed_event(self.table_, tokens) for tokens in X]) if len(X) else np.zeros((0, self.dim))
