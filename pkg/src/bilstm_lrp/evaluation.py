"""Evaluation protocols for word relevances.

* :func:`deletion_experiment` zeroes word embeddings in relevance order and
  tracks accuracy.
* :func:`extremal_words` ranks every word occurrence of a corpus.
* :func:`positional_distribution` bins relevance mass over relative position.

Relevance sorts break ties by the word itself, then by position, so every
ranking here is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import Corpus, Sentence
from .explain import RelevanceResult, explain
from .model import DELETED, ModelParams, forward

ORDERS = ("decreasing", "increasing", "random")
SUBSETS = ("correct", "false")
N_BINS = 10


class EmptySubsetError(ValueError):
    """No sentence survives the filters of an evaluation protocol."""


def word_relevance(params: ModelParams, sentence: Sentence, method: str, target=None,
                   epsilon: float = 0.001) -> RelevanceResult:
    return explain(params, sentence, method=method, target=target, epsilon=epsilon)


def relevance_order(tokens, relevances, descending: bool = True) -> list[int]:
    """Positions sorted by relevance, ties by token text then position."""
    sign = -1.0 if descending else 1.0
    return sorted(range(len(tokens)), key=lambda t: (sign * relevances[t], tokens[t], t))


def delete_words(sentence: Sentence, positions) -> Sentence:
    tokens = list(sentence.tokens)
    for t in positions:
        tokens[t] = DELETED
    return Sentence(tuple(tokens), sentence.label)


@dataclass(frozen=True)
class DeletionConfig:
    max_deletions: int = 5
    min_length: int = 10
    runs: int = 10
    seed: int = 0
    epsilon: float = 0.001
    subset: Optional[str] = None  # default: "correct" unless order is "increasing"

    def resolve_subset(self, order: str) -> str:
        if self.subset is not None:
            if self.subset not in SUBSETS:
                raise ValueError(f"subset must be one of {SUBSETS}")
            return self.subset
        return "false" if order == "increasing" else "correct"


@dataclass
class DeletionCurve:
    method: str
    order: str
    subset: str
    min_length: int
    n_sentences: int
    accuracy: np.ndarray  # index k = number of deleted words
    std: Optional[np.ndarray] = None
    runs: int = 1

    def rows(self) -> list[tuple]:
        std = self.std if self.std is not None else np.zeros_like(self.accuracy)
        return [(k, float(a), float(s)) for k, (a, s) in enumerate(zip(self.accuracy, std))]


def _select(params: ModelParams, corpus: Corpus, min_length: int, subset: str) -> list[Sentence]:
    chosen = []
    for s in corpus:
        if len(s) < min_length or s.label is None:
            continue
        correct = forward(params, s).predicted == s.label
        if correct == (subset == "correct"):
            chosen.append(s)
    if not chosen:
        raise EmptySubsetError(
            f"no initially {subset} sentences of length >= {min_length}")
    return chosen


def _accuracy_after(params: ModelParams, sentences, orders, K: int) -> np.ndarray:
    hits = np.zeros(K + 1)
    for s, order in zip(sentences, orders):
        for k in range(K + 1):
            hits[k] += forward(params, delete_words(s, order[:k])).predicted == s.label
    return hits / len(sentences)


def deletion_experiment(params: ModelParams, corpus: Corpus, method: str, order: str,
                        cfg: DeletionConfig = DeletionConfig()) -> DeletionCurve:
    """Accuracy after deleting k = 0..K words per sentence.

    Relevances are computed once on the intact sentence with the true label
    as target.  ``order="random"`` ignores ``method`` and averages
    ``cfg.runs`` seeded shuffles.
    """
    if order not in ORDERS:
        raise ValueError(f"order must be one of {ORDERS}")
    subset = cfg.resolve_subset(order)
    sentences = _select(params, corpus, cfg.min_length, subset)
    K = cfg.max_deletions

    if order == "random":
        curves = []
        for run in range(cfg.runs):
            rng = np.random.default_rng([cfg.seed, run])
            orders = [list(rng.permutation(len(s))) for s in sentences]
            curves.append(_accuracy_after(params, sentences, orders, K))
        curves = np.array(curves)
        return DeletionCurve("random", order, subset, cfg.min_length, len(sentences),
                             curves.mean(axis=0), curves.std(axis=0), cfg.runs)

    orders = []
    for s in sentences:
        R = word_relevance(params, s, method, "true", cfg.epsilon).word_relevances
        orders.append(relevance_order(s.tokens, R, descending=(order == "decreasing")))
    return DeletionCurve(method, order, subset, cfg.min_length, len(sentences),
                         _accuracy_after(params, sentences, orders, K))


@dataclass(frozen=True)
class WordScore:
    word: str
    relevance: float
    sentence: int
    position: int


def extremal_words(params: ModelParams, corpus: Corpus, method: str, target_class: int,
                   n: int = 10, epsilon: float = 0.001) -> tuple[list[WordScore], list[WordScore]]:
    """The n most and n least relevant word occurrences for ``target_class``."""
    scored = []
    for k, s in enumerate(corpus):
        R = word_relevance(params, s, method, target_class, epsilon).word_relevances
        scored.extend(WordScore(w, float(r), k, t) for t, (w, r) in enumerate(zip(s.tokens, R)))
    top = sorted(scored, key=lambda w: (-w.relevance, w.word, w.sentence, w.position))[:n]
    bottom = sorted(scored, key=lambda w: (w.relevance, w.word, w.sentence, w.position))[:n]
    return top, bottom


def interval_overlaps(length: int, n_bins: int = N_BINS) -> np.ndarray:
    """length x n_bins matrix: fraction of word t lying in bin b.

    Word t covers [t, t+1) of a sentence rescaled to [0, n_bins).
    """
    edges = np.arange(length + 1) * (n_bins / length)
    lo, hi = edges[:-1, None], edges[1:, None]
    bins = np.arange(n_bins)[None, :]
    overlap = np.clip(np.minimum(hi, bins + 1) - np.maximum(lo, bins), 0.0, None)
    return overlap / (n_bins / length)


@dataclass
class PositionalDistribution:
    target_class: int
    method: str
    n_sentences: int
    total: np.ndarray
    left: np.ndarray
    right: np.ndarray
    raw: dict = field(default_factory=dict)  # absolute mass per row before normalisation
    signed: dict = field(default_factory=dict)  # signed mass per row
    normalization: str = "per-row"

    def rows(self) -> dict[str, np.ndarray]:
        return {"total": self.total, "left": self.left, "right": self.right}


def positional_distribution(params: ModelParams, corpus: Corpus, method: str, target_class: int,
                            min_length: int = 19, epsilon: float = 0.001) -> PositionalDistribution:
    """Share of word relevance falling into each tenth of the sentence.

    Absolute word relevances are binned (SA values are already
    non-negative), each row is normalised on its own.
    """
    sentences = [s for s in corpus if len(s) >= min_length]
    if not sentences:
        raise EmptySubsetError(f"no sentences of length >= {min_length}")
    names = ("total", "left", "right")
    raw = {name: np.zeros(N_BINS) for name in names}
    signed = {name: np.zeros(N_BINS) for name in names}
    for s in sentences:
        res = word_relevance(params, s, method, target_class, epsilon)
        share = interval_overlaps(len(s))
        per_row = {"total": res.word_relevances, "left": res.left_word_relevances,
                   "right": res.right_word_relevances}
        for name, values in per_row.items():
            raw[name] += np.abs(values) @ share
            signed[name] += values @ share
    normalized = {}
    for name in names:
        mass = raw[name].sum()
        normalized[name] = raw[name] / mass if mass > 0 else np.full(N_BINS, 1.0 / N_BINS)
    return PositionalDistribution(target_class, method, len(sentences), normalized["total"],
                                  normalized["left"], normalized["right"], raw, signed)
