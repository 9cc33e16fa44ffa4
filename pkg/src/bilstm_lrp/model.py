"""Bi-directional LSTM sentence classifier with full activation tracing.

One LSTM reads the word embeddings left to right, a second, independently
parameterised LSTM reads them right to left.  Their final hidden states are
concatenated (left first) and mapped to raw class scores by a linear layer.
No softmax is applied here: the scores are what the explainers decompose.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from typing import Iterator, Optional, Sequence

import numpy as np

from . import numerics as nm
from .data import Sentence

UNK = "<unk>"
DELETED = "<del>"

GATES = ("i", "f", "o", "g")
LSTM_PARAM_NAMES = tuple(f"{kind}_{gate}" for kind in "WUb" for gate in GATES)


class LstmNumericError(nm.NonFiniteError):
    def __init__(self, timestep: int, message: str = ""):
        self.timestep = timestep
        super().__init__(message or f"non-finite activation at timestep {timestep}")


@dataclass(frozen=True)
class LstmParams:
    """Weights of one directional LSTM.

    ``W_*`` act on the previous hidden state (H x H), ``U_*`` on the input
    embedding (H x E), ``b_*`` are biases (H).
    """

    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_g: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_g: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_g: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, np.ascontiguousarray(getattr(self, f.name), dtype=nm.FLOAT))
        H, E = self.U_i.shape
        for gate in GATES:
            if getattr(self, f"W_{gate}").shape != (H, H):
                raise nm.DimensionError(f"W_{gate} must be {H}x{H}, got {getattr(self, f'W_{gate}').shape}")
            if getattr(self, f"U_{gate}").shape != (H, E):
                raise nm.DimensionError(f"U_{gate} must be {H}x{E}, got {getattr(self, f'U_{gate}').shape}")
            if getattr(self, f"b_{gate}").shape != (H,):
                raise nm.DimensionError(f"b_{gate} must have length {H}, got {getattr(self, f'b_{gate}').shape}")

    @property
    def hidden_size(self) -> int:
        return self.W_i.shape[0]

    @property
    def input_size(self) -> int:
        return self.U_i.shape[1]

    # Gates stacked in i, f, o, g order: one product per timestep instead of four.
    @cached_property
    def W(self) -> np.ndarray:
        return np.vstack([self.W_i, self.W_f, self.W_o, self.W_g])

    @cached_property
    def U(self) -> np.ndarray:
        return np.vstack([self.U_i, self.U_f, self.U_o, self.U_g])

    @cached_property
    def b(self) -> np.ndarray:
        return np.concatenate([self.b_i, self.b_f, self.b_o, self.b_g])

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in LSTM_PARAM_NAMES}

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmParams":
        H, E = hidden_size, input_size
        shapes = {"W": (H, H), "U": (H, E), "b": (H,)}
        return cls(**{n: np.zeros(shapes[n[0]]) for n in LSTM_PARAM_NAMES})

    @classmethod
    def random(cls, rng: np.random.Generator, input_size: int, hidden_size: int,
               scale: float = 0.1) -> "LstmParams":
        H, E = hidden_size, input_size
        shapes = {"W": (H, H), "U": (H, E), "b": (H,)}
        return cls(**{n: rng.uniform(-scale, scale, size=shapes[n[0]]) for n in LSTM_PARAM_NAMES})


@dataclass(frozen=True)
class ModelParams:
    left: LstmParams
    right: LstmParams
    embeddings: np.ndarray  # V x E, row k belongs to vocab[k]
    vocab: tuple[str, ...]
    W_out: np.ndarray  # C x 2H, columns ordered (left final state, right final state)
    b_out: np.ndarray  # C

    def __post_init__(self):
        object.__setattr__(self, "vocab", tuple(self.vocab))
        object.__setattr__(self, "embeddings", np.ascontiguousarray(self.embeddings, dtype=nm.FLOAT))
        object.__setattr__(self, "W_out", np.ascontiguousarray(self.W_out, dtype=nm.FLOAT))
        object.__setattr__(self, "b_out", np.ascontiguousarray(self.b_out, dtype=nm.FLOAT))
        E, H = self.left.input_size, self.left.hidden_size
        if (self.right.input_size, self.right.hidden_size) != (E, H):
            raise nm.DimensionError("left and right LSTMs must share E and H")
        if self.embeddings.ndim != 2 or self.embeddings.shape != (len(self.vocab), E):
            raise nm.DimensionError(
                f"embeddings must be {len(self.vocab)}x{E}, got {self.embeddings.shape}")
        if self.W_out.ndim != 2 or self.W_out.shape[1] != 2 * H:
            raise nm.DimensionError(f"W_out must have {2 * H} columns, got shape {self.W_out.shape}")
        if self.b_out.shape != (self.W_out.shape[0],):
            raise nm.DimensionError(f"b_out must have length {self.W_out.shape[0]}")
        if UNK not in self.vocab:
            raise ValueError(f"vocabulary must contain the unknown token {UNK!r}")
        if DELETED in self.vocab:
            raise ValueError(f"{DELETED!r} is reserved for deleted words")
        if len(set(self.vocab)) != len(self.vocab):
            raise ValueError("duplicate tokens in vocabulary")

    @property
    def embedding_dim(self) -> int:
        return self.left.input_size

    @property
    def hidden_size(self) -> int:
        return self.left.hidden_size

    @property
    def n_classes(self) -> int:
        return self.W_out.shape[0]

    @cached_property
    def index(self) -> dict[str, int]:
        return {tok: k for k, tok in enumerate(self.vocab)}

    def token_ids(self, tokens: Sequence[str]) -> list[int]:
        """Vocabulary rows for ``tokens``; -1 marks a deleted word."""
        unk = self.index[UNK]
        return [-1 if t == DELETED else self.index.get(t, unk) for t in tokens]

    def named_arrays(self) -> Iterator[tuple[str, np.ndarray]]:
        for side in ("left", "right"):
            for name, arr in getattr(self, side).arrays().items():
                yield f"{side}.{name}", arr
        yield "embeddings", self.embeddings
        yield "W_out", self.W_out
        yield "b_out", self.b_out

    @classmethod
    def from_named_arrays(cls, arrays: dict[str, np.ndarray], vocab: Sequence[str]) -> "ModelParams":
        sides = {
            side: LstmParams(**{n: arrays[f"{side}.{n}"] for n in LSTM_PARAM_NAMES})
            for side in ("left", "right")
        }
        return cls(embeddings=arrays["embeddings"], vocab=tuple(vocab),
                   W_out=arrays["W_out"], b_out=arrays["b_out"], **sides)

    def swapped(self) -> "ModelParams":
        """Exchange the two directions (and the matching W_out column blocks)."""
        H = self.hidden_size
        W_out = np.hstack([self.W_out[:, H:], self.W_out[:, :H]])
        return replace(self, left=self.right, right=self.left, W_out=W_out)

    @classmethod
    def random(cls, vocab: Sequence[str], embedding_dim: int, hidden_size: int,
               n_classes: int, rng: np.random.Generator, scale: float = 0.1) -> "ModelParams":
        vocab = tuple(vocab)
        if UNK not in vocab:
            vocab = (UNK,) + vocab
        E, H, C = embedding_dim, hidden_size, n_classes
        left = LstmParams.random(rng, E, H, scale)
        right = LstmParams.random(rng, E, H, scale)
        emb = rng.uniform(-scale, scale, size=(len(vocab), E))
        W_out = rng.uniform(-scale, scale, size=(C, 2 * H))
        b_out = rng.uniform(-scale, scale, size=C)
        return cls(left, right, emb, vocab, W_out, b_out)


@dataclass
class DirectionTrace:
    """Per-timestep activations of one directional LSTM, rows indexed by step."""

    inputs: np.ndarray  # T x E, in the order this LSTM consumed them
    pre: np.ndarray  # T x 4H gate pre-activations, blocks i, f, o, g
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c: np.ndarray
    h: np.ndarray

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def hidden_size(self) -> int:
        return self.h.shape[1]

    def pre_gate(self, gate: str) -> np.ndarray:
        H = self.hidden_size
        k = GATES.index(gate)
        return self.pre[:, k * H:(k + 1) * H]

    def c_prev(self, t: int) -> np.ndarray:
        return self.c[t - 1] if t > 0 else np.zeros(self.hidden_size)

    def h_prev(self, t: int) -> np.ndarray:
        return self.h[t - 1] if t > 0 else np.zeros(self.hidden_size)

    @property
    def final_hidden(self) -> np.ndarray:
        return self.h[-1]

    def check_consistency(self, atol: float = 1e-12) -> None:
        for t in range(len(self)):
            c = self.f[t] * self.c_prev(t) + self.i[t] * self.g[t]
            h = self.o[t] * np.tanh(self.c[t])
            if not (np.allclose(c, self.c[t], rtol=0, atol=atol)
                    and np.allclose(h, self.h[t], rtol=0, atol=atol)):
                raise AssertionError(f"trace inconsistent at timestep {t}")


@dataclass
class ForwardTrace:
    tokens: tuple[str, ...]
    inputs: np.ndarray  # T x E, original word order
    left: DirectionTrace
    right: DirectionTrace  # rows in reversed word order
    hidden: np.ndarray  # 2H, concat(left final, right final)
    scores: np.ndarray  # C raw prediction scores

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def predicted(self) -> int:
        return int(np.argmax(self.scores))


def embed(params: ModelParams, sentence: Sentence | Sequence[str]) -> np.ndarray:
    """T x E input matrix; unknown tokens use the UNK row, deleted words are zero."""
    tokens = sentence.tokens if isinstance(sentence, Sentence) else tuple(sentence)
    ids = params.token_ids(tokens)
    x = params.embeddings[np.maximum(ids, 0)].copy()
    x[np.asarray(ids) < 0] = 0.0
    return x


def forward_lstm(params: LstmParams, inputs) -> DirectionTrace:
    x = np.asarray(inputs, dtype=nm.FLOAT)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("forward_lstm needs a non-empty T x E input sequence")
    if x.shape[1] != params.input_size:
        raise nm.DimensionError(f"inputs have {x.shape[1]} dims, LSTM expects {params.input_size}")
    T, H = x.shape[0], params.hidden_size
    W, U, b = params.W, params.U, params.b
    pre = np.empty((T, 4 * H))
    gates = np.empty((T, 4 * H))
    c = np.empty((T, H))
    h = np.empty((T, H))
    h_prev = np.zeros(H)
    c_prev = np.zeros(H)
    with np.errstate(invalid="ignore", over="ignore"):  # reported below
        for t in range(T):
            z = W @ h_prev + U @ x[t] + b
            pre[t] = z
            gates[t, :3 * H] = np.exp(-np.logaddexp(0.0, -z[:3 * H]))
            gates[t, 3 * H:] = np.tanh(z[3 * H:])
            a = gates[t]
            c[t] = a[H:2 * H] * c_prev + a[:H] * a[3 * H:]
            h[t] = a[2 * H:3 * H] * np.tanh(c[t])
            h_prev, c_prev = h[t], c[t]
    bad = ~(np.isfinite(pre).all(axis=1) & np.isfinite(c).all(axis=1) & np.isfinite(h).all(axis=1))
    if bad.any():
        raise LstmNumericError(int(np.argmax(bad)))
    return DirectionTrace(
        inputs=x, pre=pre,
        i=gates[:, :H], f=gates[:, H:2 * H], o=gates[:, 2 * H:3 * H], g=gates[:, 3 * H:],
        c=c, h=h,
    )


def forward_inputs(params: ModelParams, inputs: np.ndarray, tokens: Sequence[str] = ()) -> ForwardTrace:
    """Run the classifier on an explicit T x E embedding matrix."""
    inputs = np.asarray(inputs, dtype=nm.FLOAT)
    left = forward_lstm(params.left, inputs)
    right = forward_lstm(params.right, inputs[::-1])
    hidden = np.concatenate([left.final_hidden, right.final_hidden])
    scores = nm.check_finite(params.W_out @ hidden + params.b_out, "output scores")
    return ForwardTrace(tuple(tokens), inputs, left, right, hidden, scores)


def forward(params: ModelParams, sentence: Sentence | Sequence[str]) -> ForwardTrace:
    tokens = sentence.tokens if isinstance(sentence, Sentence) else tuple(sentence)
    return forward_inputs(params, embed(params, tokens), tokens)


def predict(params: ModelParams, sentence: Sentence | Sequence[str]) -> int:
    return forward(params, sentence).predicted


def argmax(scores) -> int:
    """Index of the largest score; ties go to the lowest index."""
    return int(np.argmax(np.asarray(scores)))


@dataclass
class LstmGradients:
    inputs: np.ndarray  # T x E, in the direction's own time order
    W: Optional[np.ndarray] = None  # 4H x H, stacked i, f, o, g
    U: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None


def lstm_backward(trace: DirectionTrace, params: LstmParams, dh_final: np.ndarray,
                  param_grads: bool = False) -> LstmGradients:
    """Reverse-mode pass through one LSTM given dL/dh_T."""
    T, H = len(trace), trace.hidden_size
    W, U = params.W, params.U
    dx = np.zeros_like(trace.inputs)
    if param_grads:
        dW, dU, db = np.zeros_like(W), np.zeros_like(U), np.zeros(4 * H)
    dh = np.array(dh_final, dtype=nm.FLOAT)
    dc = np.zeros(H)
    dpre = np.empty(4 * H)
    for t in range(T - 1, -1, -1):
        i, f, o, g = trace.i[t], trace.f[t], trace.o[t], trace.g[t]
        tc = np.tanh(trace.c[t])
        dc = dc + dh * o * (1.0 - tc * tc)
        dpre[:H] = dc * g * i * (1.0 - i)
        dpre[H:2 * H] = dc * trace.c_prev(t) * f * (1.0 - f)
        dpre[2 * H:3 * H] = dh * tc * o * (1.0 - o)
        dpre[3 * H:] = dc * i * (1.0 - g * g)
        dx[t] = U.T @ dpre
        if param_grads:
            h_prev = trace.h_prev(t)
            dW += np.outer(dpre, h_prev)
            dU += np.outer(dpre, trace.inputs[t])
            db += dpre
        dh = W.T @ dpre
        dc = dc * f
    if param_grads:
        return LstmGradients(dx, dW, dU, db)
    return LstmGradients(dx)


@dataclass
class Gradients:
    """Gradients of a scalar of the output scores w.r.t. inputs and (optionally) weights."""

    inputs: np.ndarray  # T x E, original word order
    left_inputs: np.ndarray  # share flowing through the left LSTM, original order
    right_inputs: np.ndarray  # share flowing through the right LSTM, original order
    params: dict[str, np.ndarray] = field(default_factory=dict)


def backward(params: ModelParams, trace: ForwardTrace, dscores: np.ndarray,
             param_grads: bool = False) -> Gradients:
    """Backpropagate ``dscores`` (dL/df) to the input embeddings and weights.

    With ``param_grads`` set, ``Gradients.params`` maps the archive names
    (``left.W_i`` ... ``W_out``, ``b_out``) to their gradients; embedding
    gradients are returned per position in ``inputs`` and scattered by the
    trainer.
    """
    H = params.hidden_size
    dscores = np.asarray(dscores, dtype=nm.FLOAT)
    dhidden = params.W_out.T @ dscores
    gl = lstm_backward(trace.left, params.left, dhidden[:H], param_grads)
    gr = lstm_backward(trace.right, params.right, dhidden[H:], param_grads)
    right_in = gr.inputs[::-1]
    out = Gradients(inputs=gl.inputs + right_in, left_inputs=gl.inputs, right_inputs=right_in)
    if param_grads:
        for side, g in (("left", gl), ("right", gr)):
            for k, gate in enumerate(GATES):
                rows = slice(k * H, (k + 1) * H)
                out.params[f"{side}.W_{gate}"] = g.W[rows]
                out.params[f"{side}.U_{gate}"] = g.U[rows]
                out.params[f"{side}.b_{gate}"] = g.b[rows]
        out.params["W_out"] = np.outer(dscores, trace.hidden)
        out.params["b_out"] = dscores.copy()
    return out
