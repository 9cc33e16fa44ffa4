"""Word-level relevance for a target class: sensitivity analysis and LRP.

Both methods produce a relevance value per input embedding dimension; a
word's relevance is the sum over its dimensions.

* Sensitivity analysis (SA) squares the exact gradient of the class score.
* LRP redistributes the class score itself backwards.  Weighted sums use the
  epsilon/delta rule in :func:`lrp_linear`; two-way products inside the LSTM
  give everything to the source factor and nothing to the sigmoid gate
  (:func:`lrp_multiplicative`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import numerics as nm
from .data import Sentence
from .model import DirectionTrace, ForwardTrace, LstmParams, ModelParams, backward, forward

METHODS = ("sa", "lrp", "lrp_cons")


class ForwardMismatchError(ValueError):
    """Upper-layer activations do not match weights @ lower + bias."""


@dataclass(frozen=True)
class LrpConfig:
    target_class: Optional[int] = None  # None: the predicted class
    epsilon: float = 0.001
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.delta not in (0.0, 1.0):
            raise ValueError(f"delta must be 0.0 or 1.0, got {self.delta}")


@dataclass
class LstmRelevance:
    """Relevance of every neuron of one directional LSTM, rows in its time order."""

    inputs: np.ndarray  # T x E
    h: np.ndarray  # T x H, everything that reached h_t
    c: np.ndarray  # T x H
    g: np.ndarray  # T x H, cell candidate (source of i*g)
    i: np.ndarray  # T x H, gates: always zero
    f: np.ndarray
    o: np.ndarray
    boundary: float  # relevance that reached h_0 and c_0


@dataclass
class RelevanceResult:
    method: str
    target_class: int
    tokens: tuple[str, ...]
    word_relevances: np.ndarray  # T
    input_relevances: np.ndarray  # T x E
    left_word_relevances: np.ndarray  # T, share through the left-to-right LSTM
    right_word_relevances: np.ndarray  # T, share through the right-to-left LSTM
    scores: np.ndarray
    output_relevance: float  # relevance at the top: f_c(x) for LRP, |grad|^2 for SA
    input_total: float
    boundary_relevance: float = 0.0
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    details: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.word_relevances)


def _check_class(params: ModelParams, c: int) -> int:
    if not 0 <= int(c) < params.n_classes:
        raise ValueError(f"target class {c} out of range 0..{params.n_classes - 1}")
    return int(c)


def _class_gradients(trace: ForwardTrace, params: ModelParams, c: int):
    seed = np.zeros(params.n_classes)
    seed[_check_class(params, c)] = 1.0
    return backward(params, trace, seed)


def backward_gradients(trace: ForwardTrace, params: ModelParams, c: int) -> np.ndarray:
    """T x E matrix of d f_c / d x_t, in original word order."""
    return _class_gradients(trace, params, c).inputs


def sa_relevance(trace: ForwardTrace, params: ModelParams, c: int) -> RelevanceResult:
    grads = _class_gradients(trace, params, c)
    g = grads.inputs
    R = g * g
    # g = g_left + g_right, so g*g_left + g*g_right reproduces g**2 exactly in
    # exact arithmetic; those products are the per-encoder shares.
    left = (g * grads.left_inputs).sum(axis=1)
    right = (g * grads.right_inputs).sum(axis=1)
    total = float(R.sum())
    return RelevanceResult(
        method="sa", target_class=int(c), tokens=trace.tokens,
        word_relevances=R.sum(axis=1), input_relevances=R,
        left_word_relevances=left, right_word_relevances=right,
        scores=trace.scores.copy(), output_relevance=total, input_total=total,
    )


def lrp_linear(z_lower, weights, bias, z_upper, R_upper, eps: float = 0.001,
               delta: float = 0.0, N: Optional[int] = None, atol: float = 1e-9) -> np.ndarray:
    """Redistribute relevance through ``z_upper = weights @ z_lower + bias``.

    ``weights`` is (upper x lower).  The message from upper neuron j to lower
    neuron i is::

        (z_i w_ji + (eps sign(z_j) + delta b_j) / N) / (z_j + eps sign(z_j)) * R_j

    with sign(0) = +1, and ``N`` defaulting to the number of lower neurons.
    An upper neuron whose denominator is exactly zero (only possible with
    eps = 0) sends nothing.
    """
    z_lower = np.asarray(z_lower, dtype=nm.FLOAT)
    weights = np.asarray(weights, dtype=nm.FLOAT)
    bias = np.asarray(bias, dtype=nm.FLOAT)
    z_upper = np.asarray(z_upper, dtype=nm.FLOAT)
    R_upper = np.asarray(R_upper, dtype=nm.FLOAT)
    M, D = weights.shape
    if z_lower.shape != (D,) or bias.shape != (M,) or z_upper.shape != (M,) or R_upper.shape != (M,):
        raise nm.DimensionError(
            f"lrp_linear: weights {weights.shape}, z_lower {z_lower.shape}, bias {bias.shape}, "
            f"z_upper {z_upper.shape}, R_upper {R_upper.shape}")
    if np.max(np.abs(weights @ z_lower + bias - z_upper), initial=0.0) > atol:
        raise ForwardMismatchError("z_upper differs from weights @ z_lower + bias")
    N = D if N is None else N
    sign = np.where(z_upper >= 0, 1.0, -1.0)
    denom = z_upper + eps * sign
    safe = np.where(denom == 0, 1.0, denom)
    scale = np.where(denom == 0, 0.0, R_upper / safe)
    numer = weights * z_lower[np.newaxis, :] + ((eps * sign + delta * bias) / N)[:, np.newaxis]
    return nm.check_finite((numer * scale[:, np.newaxis]).sum(axis=0), "lrp_linear relevance")


def lrp_multiplicative(relevance) -> tuple[np.ndarray, np.ndarray]:
    """Split the relevance of ``gate * source``: (gate share, source share).

    The gate gets nothing and the source gets everything.
    """
    R = np.asarray(relevance, dtype=nm.FLOAT)
    return np.zeros_like(R), R.copy()


def lrp_lstm(trace: DirectionTrace, params: LstmParams, R_hT, eps: float = 0.001,
             delta: float = 0.0) -> LstmRelevance:
    T, H = len(trace), trace.hidden_size
    E = trace.inputs.shape[1]
    R_h = np.zeros((T, H))
    R_c = np.zeros((T, H))
    R_g = np.zeros((T, H))
    R_i = np.zeros((T, H))
    R_f = np.zeros((T, H))
    R_o = np.zeros((T, H))
    R_x = np.zeros((T, E))
    R_h[T - 1] = R_hT
    boundary = 0.0

    unit = np.hstack([np.eye(H), np.eye(H)])
    no_bias = np.zeros(H)
    W_cand = np.hstack([params.W_g, params.U_g])
    pre_g = trace.pre_gate("g")

    for t in range(T - 1, -1, -1):
        # h_t = o_t * tanh(c_t); tanh is transparent
        R_o[t], from_h = lrp_multiplicative(R_h[t])
        R_c[t] += from_h

        # c_t = f_t * c_{t-1} + i_t * g_t as a unit-weight sum of 2H products
        c_prev = trace.c_prev(t)
        lower = np.concatenate([trace.f[t] * c_prev, trace.i[t] * trace.g[t]])
        R_lower = lrp_linear(lower, unit, no_bias, trace.c[t], R_c[t], eps, delta, N=2 * H)
        R_f[t], R_cprev = lrp_multiplicative(R_lower[:H])
        R_i[t], R_g[t] = lrp_multiplicative(R_lower[H:])

        # g_t = tanh(W_g h_{t-1} + U_g x_t + b_g)
        h_prev = trace.h_prev(t)
        R_in = lrp_linear(np.concatenate([h_prev, trace.inputs[t]]), W_cand, params.b_g,
                          pre_g[t], R_g[t], eps, delta, N=H + E)
        R_x[t] = R_in[H:]
        if t > 0:
            R_h[t - 1] += R_in[:H]
            R_c[t - 1] += R_cprev
        else:
            boundary = float(R_in[:H].sum() + R_cprev.sum())

    return LstmRelevance(inputs=R_x, h=R_h, c=R_c, g=R_g, i=R_i, f=R_f, o=R_o, boundary=boundary)


def lrp_bilstm(trace: ForwardTrace, params: ModelParams, cfg: LrpConfig = LrpConfig()) -> RelevanceResult:
    c = trace.predicted if cfg.target_class is None else _check_class(params, cfg.target_class)
    H = params.hidden_size
    eps, delta = cfg.epsilon, cfg.delta

    R_out = np.zeros(params.n_classes)
    R_out[c] = trace.scores[c]
    R_hidden = lrp_linear(trace.hidden, params.W_out, params.b_out, trace.scores, R_out,
                          eps, delta, N=2 * H)
    left = lrp_lstm(trace.left, params.left, R_hidden[:H], eps, delta)
    right = lrp_lstm(trace.right, params.right, R_hidden[H:], eps, delta)

    right_inputs = right.inputs[::-1]
    R_inputs = left.inputs + right_inputs
    return RelevanceResult(
        method="lrp", target_class=c, tokens=trace.tokens,
        word_relevances=R_inputs.sum(axis=1), input_relevances=R_inputs,
        left_word_relevances=left.inputs.sum(axis=1),
        right_word_relevances=right_inputs.sum(axis=1),
        scores=trace.scores.copy(), output_relevance=float(trace.scores[c]),
        input_total=float(R_inputs.sum()),
        boundary_relevance=left.boundary + right.boundary,
        epsilon=eps, delta=delta,
        details={"hidden": R_hidden, "left": left, "right": right},
    )


Target = Union[int, str, None]


def resolve_target(target: Target, sentence: Sentence, trace: ForwardTrace) -> int:
    """``None`` means the true label when known, else the prediction."""
    if target is None:
        return sentence.label if sentence.label is not None else trace.predicted
    if target == "true":
        if sentence.label is None:
            raise ValueError("target 'true' needs a labelled sentence")
        return sentence.label
    if target == "pred":
        return trace.predicted
    return int(target)


def explain(params: ModelParams, sentence: Union[Sentence, Sequence[str]], method: str = "lrp",
            target: Target = None, epsilon: float = 0.001, delta: Optional[float] = None) -> RelevanceResult:
    """Forward pass plus relevance for one sentence.

    ``method`` is ``"sa"``, ``"lrp"`` (delta 0) or ``"lrp_cons"`` (delta 1);
    an explicit ``delta`` overrides the one implied by the method name.
    """
    if not isinstance(sentence, Sentence):
        sentence = Sentence(tuple(sentence))
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    trace = forward(params, sentence)
    c = _check_class(params, resolve_target(target, sentence, trace))
    if method == "sa":
        return sa_relevance(trace, params, c)
    if delta is None:
        delta = 1.0 if method == "lrp_cons" else 0.0
    result = lrp_bilstm(trace, params, LrpConfig(c, epsilon, delta))
    result.method = method
    return result
