"""Log tokenization and online template mining with a fixed-depth prefix tree."""
from __future__ import annotations

import hashlib
import json
import re
from typing import Iterable, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ConfigError

WILDCARD = "<*>"
CLASS_MARKERS = ("NUM", "HEX", "IP", "PATH")
EMPTY = "EMPTY"
UNKNOWN_EVENT = -1

_PATH_RE = re.compile(r"^(?:[a-zA-Z][\w+.-]*://\S+|/[^\s/]+(?:/[^\s/]*)*)$")
_PIECE_RE = re.compile(
    r"(?P<IP>(?<![\d.])\d{1,3}(?:\.\d{1,3}){3}(?![\d.]))"
    r"|(?P<HEX>0[xX][0-9a-fA-F]+|(?<![0-9a-zA-Z])(?=[0-9a-fA-F]*[0-9])(?=[0-9a-fA-F]*[a-fA-F])[0-9a-fA-F]{8,}(?![0-9a-zA-Z]))"
    r"|(?P<NUM>\d+(?:\.\d+)?)"
    r"|(?P<WORD>[A-Za-z]+)"
)


def tokenize(message: str) -> list:
    """Split a log line into lowercase word tokens and variable-class markers.

    >>> tokenize("Connected to 10.0.0.1:8080")
    ['connected', 'to', 'IP', 'NUM']
    """
    tokens = []
    for piece in message.split():
        if "/" in piece and _PATH_RE.match(piece.rstrip(".,;:")):
            tokens.append("PATH")
            continue
        for m in _PIECE_RE.finditer(piece):
            kind = m.lastgroup
            tokens.append(m.group().lower() if kind == "WORD" else kind)
    return tokens or [EMPTY]


def _is_variable(token: str) -> bool:
    return token == WILDCARD or token in CLASS_MARKERS


class _Node:
    __slots__ = ("children", "template_ids")

    def __init__(self):
        self.children = {}
        self.template_ids = []


class TemplateStore:
    """Online template miner.

    Messages descend a tree keyed by token count and then by up to
    ``max_depth - 2`` leading tokens (variable tokens share the wildcard key).
    At the leaf, the template with the highest positional match ratio absorbs
    the message if the ratio reaches ``sim_threshold``; mismatching positions
    become wildcards. Otherwise a new template is created.

    With ``keep_classes=False`` the NUM/HEX/IP/PATH markers are stored in
    templates as wildcards.
    """

    def __init__(self, sim_threshold: float = 0.5, max_depth: int = 4, keep_classes: bool = False):
        if not 0 < sim_threshold <= 1:
            raise ConfigError(f"sim_threshold must lie in (0, 1], got {sim_threshold}")
        if max_depth < 3:
            raise ConfigError(f"max_depth must be >= 3, got {max_depth}")
        self.sim_threshold = sim_threshold
        self.max_depth = max_depth
        self.keep_classes = keep_classes
        self.templates: list = []
        self._root = _Node()
        self._frozen = False

    def __len__(self):
        return len(self.templates)

    @property
    def frozen(self) -> bool:
        return self._frozen

    def freeze(self) -> "TemplateStore":
        self._frozen = True
        return self

    def copy(self, frozen: Optional[bool] = None) -> "TemplateStore":
        other = TemplateStore.from_records(self.to_records(), self.sim_threshold, self.max_depth, self.keep_classes)
        if frozen if frozen is not None else self._frozen:
            other.freeze()
        return other

    def _normalize(self, tokens: Sequence[str]) -> list:
        if self.keep_classes:
            return list(tokens)
        return [WILDCARD if t in CLASS_MARKERS else t for t in tokens]

    def _leaf(self, tokens: Sequence[str], create: bool) -> Optional[_Node]:
        node = self._root.children.get(len(tokens))
        if node is None:
            if not create:
                return None
            node = self._root.children[len(tokens)] = _Node()
        for tok in tokens[: self.max_depth - 2]:
            key = WILDCARD if _is_variable(tok) else tok
            child = node.children.get(key)
            if child is None:
                if not create:
                    return None
                child = node.children[key] = _Node()
            node = child
        return node

    @staticmethod
    def match_ratio(template: Sequence[str], tokens: Sequence[str]) -> float:
        return sum(a == b for a, b in zip(template, tokens)) / len(tokens)

    def _best(self, leaf: _Node, tokens: Sequence[str]):
        best_id, best_ratio = None, -1.0
        for tid in leaf.template_ids:
            r = self.match_ratio(self.templates[tid], tokens)
            if r > best_ratio:
                best_id, best_ratio = tid, r
        return best_id, best_ratio

    def parse(self, tokens: Sequence[str]) -> int:
        tokens = self._normalize(tokens) or [EMPTY]
        leaf = self._leaf(tokens, create=not self._frozen)
        if leaf is None:
            return UNKNOWN_EVENT
        tid, ratio = self._best(leaf, tokens)
        if tid is not None and ratio >= self.sim_threshold:
            if not self._frozen:
                tpl = self.templates[tid]
                self.templates[tid] = [a if a == b else WILDCARD for a, b in zip(tpl, tokens)]
            return tid
        if self._frozen:
            return UNKNOWN_EVENT
        tid = len(self.templates)
        self.templates.append(list(tokens))
        leaf.template_ids.append(tid)
        return tid

    def parse_message(self, message: str) -> int:
        return self.parse(tokenize(message))

    def template(self, event_id: int) -> list:
        return list(self.templates[event_id])

    def to_records(self) -> list:
        return [{"id": i, "template_tokens": list(t)} for i, t in enumerate(self.templates)]

    @classmethod
    def from_records(cls, records: Iterable[dict], sim_threshold=0.5, max_depth=4, keep_classes=False) -> "TemplateStore":
        store = cls(sim_threshold, max_depth, keep_classes)
        for expected, rec in enumerate(sorted(records, key=lambda r: r["id"])):
            if rec["id"] != expected:
                raise ConfigError("template ids must be dense 0..K-1")
            tokens = list(rec["template_tokens"])
            store.templates.append(tokens)
            store._leaf(tokens, create=True).template_ids.append(expected)
        return store

    def to_json(self) -> str:
        return json.dumps(self.to_records(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str, **kwargs) -> "TemplateStore":
        return cls.from_records(json.loads(text), **kwargs)

    def digest(self) -> str:
        settings = f"{self.sim_threshold}|{self.max_depth}|{int(self.keep_classes)}|"
        return hashlib.sha256((settings + self.to_json()).encode()).hexdigest()


class TemplateMiner(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` mines templates, ``transform`` maps messages to event ids.

    ``transform`` uses a frozen copy, so messages matching no mined template come
    back as ``UNKNOWN_EVENT``.
    """

    def __init__(self, sim_threshold=0.5, max_depth=4, keep_classes=False):
        self.sim_threshold = sim_threshold
        self.max_depth = max_depth
        self.keep_classes = keep_classes

    def fit(self, X, y=None):
        store = TemplateStore(self.sim_threshold, self.max_depth, self.keep_classes)
        for msg in X:
            store.parse_message(msg)
        self.store_ = store.freeze()
        self.n_templates_ = len(store)
        return self

    def transform(self, X):
        check_is_fitted(self, "store_")
        return np.array([self.store_.parse_message(m) for m in X], dtype=np.int64)

    def fit_transform(self, X, y=None, **fit_params):
        X = list(X)
        store = TemplateStore(self.sim_threshold, self.max_depth, self.keep_classes)
        ids = np.array([store.parse_message(m) for m in X], dtype=np.int64)
        self.store_ = store.freeze()
        self.n_templates_ = len(store)
        return ids
