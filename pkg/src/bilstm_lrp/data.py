"""Sentences and labelled corpora."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

CLASS_NAMES = ("very negative", "negative", "neutral", "positive", "very positive")


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    label: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.tokens, str):
            raise TypeError("tokens must be a sequence of strings, not a str")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("a sentence needs at least one token")
        if self.label is not None and self.label < 0:
            raise ValueError(f"negative class label {self.label}")

    @classmethod
    def from_text(cls, text: str, label: Optional[int] = None) -> "Sentence":
        return cls(tuple(text.lower().split()), label)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class Corpus:
    sentences: list[Sentence] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, idx):
        return self.sentences[idx]

    def token_counts(self) -> Counter:
        return Counter(tok for s in self.sentences for tok in s.tokens)

    def vocabulary(self, extra: Iterable[str] = ()) -> list[str]:
        """Sorted list of distinct tokens, with ``extra`` entries first."""
        extra = list(dict.fromkeys(extra))
        seen = set(extra)
        return extra + sorted(t for t in self.token_counts() if t not in seen)

    def filter_min_length(self, min_length: int) -> "Corpus":
        return Corpus([s for s in self.sentences if len(s) >= min_length])

    def labels(self) -> list[Optional[int]]:
        return [s.label for s in self.sentences]


def check_labels(sentences: Sequence[Sentence], n_classes: int) -> None:
    for k, s in enumerate(sentences):
        if s.label is None or not 0 <= s.label < n_classes:
            raise ValueError(f"sentence {k} has label {s.label!r}, expected 0..{n_classes - 1}")
