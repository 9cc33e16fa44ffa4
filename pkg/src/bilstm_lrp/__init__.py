"""Bi-directional LSTM sentence classifier with SA and LRP word relevances."""

from .data import CLASS_NAMES, Corpus, Sentence
from .explain import LrpConfig, RelevanceResult, explain, lrp_bilstm, sa_relevance
from .model import ModelParams, forward, predict
from .train import TrainConfig, init_model, train

__all__ = [
    "CLASS_NAMES", "Corpus", "Sentence", "LrpConfig", "RelevanceResult", "explain",
    "lrp_bilstm", "sa_relevance", "ModelParams", "forward", "predict",
    "TrainConfig", "init_model", "train",
]
__version__ = "0.1.0"
