"""Plain SGD trainer (softmax cross-entropy, per-parameter norm clipping)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import Corpus, check_labels
from . import numerics as nm
from .model import ModelParams, backward, forward

log = logging.getLogger(__name__)


class TrainingDivergedError(FloatingPointError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"non-finite loss in epoch {epoch}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.3
    epochs: int = 6
    clip: float = 5.0
    lr_decay: float = 1.0  # epoch e uses learning_rate / (1 + lr_decay * (e - 1))
    seed: int = 0
    init_scale: float = 0.3
    embedding_dim: int = 12
    hidden_size: int = 12

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not self.clip > 0:
            raise ValueError("clip must be > 0")
        if self.lr_decay < 0:
            raise ValueError("lr_decay must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    loss: float
    train_acc: float
    test_acc: Optional[float]

    def line(self) -> str:
        test = "nan" if self.test_acc is None else f"{self.test_acc:.6f}"
        return f"{self.epoch}\t{self.loss:.6f}\t{self.train_acc:.6f}\t{test}"


def softmax(scores: np.ndarray) -> np.ndarray:
    e = np.exp(scores - scores.max())
    return e / e.sum()


def sentence_loss(params: ModelParams, sentence) -> float:
    scores = forward(params, sentence).scores
    m = scores.max()
    return float(m + np.log(np.exp(scores - m).sum()) - scores[sentence.label])


def loss_and_gradients(params: ModelParams, sentence) -> tuple[float, dict[str, np.ndarray]]:
    """Cross-entropy of one sentence and its gradient for every named parameter."""
    trace = forward(params, sentence)
    p = softmax(trace.scores)
    loss = -float(np.log(p[sentence.label]))
    dscores = p.copy()
    dscores[sentence.label] -= 1.0
    grads = backward(params, trace, dscores, param_grads=True)
    dE = np.zeros_like(params.embeddings)
    for t, k in enumerate(params.token_ids(sentence.tokens)):
        if k >= 0:
            dE[k] += grads.inputs[t]
    out = dict(grads.params)
    out["embeddings"] = dE
    return loss, out


def evaluate(params: ModelParams, corpus: Corpus) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over a labelled corpus."""
    if not len(corpus):
        return float("nan"), float("nan")
    losses, hits = [], 0
    for s in corpus:
        scores = forward(params, s).scores
        m = scores.max()
        losses.append(m + np.log(np.exp(scores - m).sum()) - scores[s.label])
        hits += int(np.argmax(scores)) == s.label
    return float(np.mean(losses)), hits / len(corpus)


def accuracy(params: ModelParams, corpus: Corpus) -> float:
    return evaluate(params, corpus)[1]


def init_model(vocab, cfg: TrainConfig, n_classes: int = 5) -> ModelParams:
    """Every parameter drawn uniformly from [-init_scale, init_scale]."""
    rng = np.random.default_rng(cfg.seed)
    return ModelParams.random(vocab, cfg.embedding_dim, cfg.hidden_size, n_classes, rng, cfg.init_scale)


def train(model: ModelParams, corpus: Corpus, cfg: TrainConfig,
          test: Optional[Corpus] = None) -> tuple[ModelParams, list[EpochLog]]:
    """Per-sentence SGD in a seeded random order.

    The log holds the full-corpus loss and accuracies after every epoch,
    starting with the untrained model as epoch 0.
    """
    check_labels(corpus.sentences, model.n_classes)
    if test is not None:
        check_labels(test.sentences, model.n_classes)
    rng = np.random.default_rng(cfg.seed + 1)
    arrays = {name: arr.copy() for name, arr in model.named_arrays()}
    vocab = model.vocab

    def snapshot() -> ModelParams:
        return ModelParams.from_named_arrays(arrays, vocab)

    def record(epoch: int, params: ModelParams) -> EpochLog:
        try:
            loss, acc = evaluate(params, corpus)
        except nm.NonFiniteError:
            raise TrainingDivergedError(epoch) from None
        if not np.isfinite(loss):
            raise TrainingDivergedError(epoch)
        entry = EpochLog(epoch, loss, acc, None if test is None else accuracy(params, test))
        log.info("epoch %s", entry.line())
        return entry

    params = model
    history = [record(0, params)]
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.learning_rate / (1.0 + cfg.lr_decay * (epoch - 1))
        for k in rng.permutation(len(corpus)):
            try:
                loss, grads = loss_and_gradients(params, corpus[int(k)])
            except nm.NonFiniteError:
                raise TrainingDivergedError(epoch) from None
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            for name, g in grads.items():
                norm = np.linalg.norm(g)
                if norm > cfg.clip:
                    g = g * (cfg.clip / norm)
                arrays[name] -= lr * g
            params = snapshot()
        history.append(record(epoch, params))
    return params, history
