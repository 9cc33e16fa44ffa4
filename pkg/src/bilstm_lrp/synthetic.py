"""Deterministic five-class synthetic sentiment corpus.

Each sentence carries one sentiment phrase embedded in neutral filler text.
The phrase alone fixes the label, so the words that should matter are known:

* strong keyword            -> very negative / very positive
* mild keyword              -> negative / positive
* negator + mild positive   -> negative
* negator + mild negative   -> positive
* no sentiment word         -> neutral (a filler word fills the phrase slot)

Intensifiers only ever precede strong keywords and leave the label alone.

A fraction of sentences use a contrast ("X but Y"), where only the second
phrase counts.  The label-noise rates replace that fraction of labels by a
different, uniformly drawn class; noise in the test split guarantees that a
well-trained model still misclassifies some sentences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Corpus, Sentence

VERY_NEGATIVE, NEGATIVE, NEUTRAL, POSITIVE, VERY_POSITIVE = range(5)


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    n_classes: int = 5
    strong_positive: tuple[str, ...] = ("excellent", "brilliant", "gorgeous", "masterful", "superb")
    mild_positive: tuple[str, ...] = ("good", "nice", "pleasant", "charming", "solid")
    mild_negative: tuple[str, ...] = ("bad", "dull", "weak", "boring", "clumsy")
    strong_negative: tuple[str, ...] = ("terrible", "awful", "horrible", "dreadful", "atrocious")
    negators: tuple[str, ...] = ("not", "n't")
    intensifiers: tuple[str, ...] = ("very", "truly", "really")
    templates: tuple[str, ...] = (
        "this movie is {}",
        "the film was {}",
        "i found the story {}",
        "the acting felt {}",
        "overall it is {}",
        "the script seems {}",
    )
    filler_size: int = 60
    min_length: int = 6
    max_length: int = 24
    negation_rate: float = 0.15
    intensifier_rate: float = 0.15
    contrast_rate: float = 0.1
    train_label_noise: float = 0.0
    test_label_noise: float = 0.05
    opposite_decoys: bool = False
    n_train: int = 3000
    n_test: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.n_classes != 5:
            raise ValueError("the synthetic corpus is defined for exactly five classes")
        if not 0 < self.min_length <= self.max_length:
            raise ValueError("need 0 < min_length <= max_length")

    @property
    def positive_keywords(self) -> frozenset[str]:
        return frozenset(self.strong_positive + self.mild_positive)

    @property
    def negative_keywords(self) -> frozenset[str]:
        return frozenset(self.strong_negative + self.mild_negative)

    @property
    def filler_words(self) -> tuple[str, ...]:
        return tuple(f"w{k:03d}" for k in range(self.filler_size))


def _pick(rng: np.random.Generator, words):
    return words[int(rng.integers(len(words)))]


def _phrase(spec: SyntheticCorpusSpec, rng: np.random.Generator, label: int) -> list[str]:
    roll = rng.random()
    if label == NEUTRAL:
        return [_pick(rng, spec.filler_words)]
    positive = label > NEUTRAL
    strong = label in (VERY_NEGATIVE, VERY_POSITIVE)
    if strong:
        word = _pick(rng, spec.strong_positive if positive else spec.strong_negative)
        if roll < spec.intensifier_rate:
            return [_pick(rng, spec.intensifiers), word]
        return [word]
    if roll < spec.negation_rate:
        # "not bad" is positive, "not good" is negative
        flipped = spec.mild_negative if positive else spec.mild_positive
        return [_pick(rng, spec.negators), _pick(rng, flipped)]
    return [_pick(rng, spec.mild_positive if positive else spec.mild_negative)]


def _sentence(spec: SyntheticCorpusSpec, rng: np.random.Generator, label: int,
              noise: float) -> Sentence:
    phrase = _phrase(spec, rng, label)
    if rng.random() < spec.contrast_rate:
        if spec.opposite_decoys and label != NEUTRAL:
            decoy = VERY_POSITIVE - label
        else:
            decoy = int(rng.integers(spec.n_classes))
            if decoy == label:
                decoy = (label + 2) % spec.n_classes
        phrase = _phrase(spec, rng, decoy) + ["but"] + phrase
    core = _pick(rng, spec.templates).format(" ".join(phrase)).split()
    fillers = spec.filler_words
    length = int(rng.integers(max(spec.min_length, len(core)), max(spec.max_length, len(core)) + 1))
    n_pad = length - len(core)
    n_before = int(rng.integers(n_pad + 1))
    before = [_pick(rng, fillers) for _ in range(n_before)]
    after = [_pick(rng, fillers) for _ in range(n_pad - n_before)]
    if rng.random() < noise:
        label = (label + 1 + int(rng.integers(spec.n_classes - 1))) % spec.n_classes
    return Sentence(tuple(before + core + after), label)


def generate_synthetic_corpus(spec: SyntheticCorpusSpec = SyntheticCorpusSpec()) -> tuple[Corpus, Corpus]:
    """Return (train, test) corpora; identical specs give identical corpora."""
    rng = np.random.default_rng(spec.seed)
    total = spec.n_train + spec.n_test
    labels = np.arange(total) % spec.n_classes
    rng.shuffle(labels)
    sentences = [
        _sentence(spec, rng, int(y), spec.train_label_noise if k < spec.n_train else spec.test_label_noise)
        for k, y in enumerate(labels)
    ]
    return Corpus(sentences[:spec.n_train]), Corpus(sentences[spec.n_train:])


def keyword_polarity(spec: SyntheticCorpusSpec, word: str) -> int:
    """+1 for construction-positive keywords, -1 for negative ones, else 0."""
    if word in spec.positive_keywords:
        return 1
    if word in spec.negative_keywords:
        return -1
    return 0
