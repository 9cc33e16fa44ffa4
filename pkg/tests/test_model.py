import numpy as np
import pytest

from bilstm_lrp.data import Sentence
from bilstm_lrp.model import (DELETED, UNK, LstmNumericError, LstmParams, ModelParams, argmax,
                              embed, forward, forward_lstm, predict)

from oracles import random_model, random_sentence


def test_embed_lookup_unknown_and_deleted(rng):
    params = random_model(rng, 4, 3)
    x = embed(params, Sentence(("tok3", "zxqv", DELETED)))
    assert np.array_equal(x[0], params.embeddings[params.index["tok3"]])
    assert np.array_equal(x[1], params.embeddings[params.index[UNK]])
    assert np.array_equal(x[2], np.zeros(4))


def test_zero_weights_give_zero_states(rng):
    trace = forward_lstm(LstmParams.zeros(3, 4), rng.normal(size=(5, 3)))
    assert not trace.c.any() and not trace.h.any()


def test_single_step_closed_form(rng):
    p = LstmParams.zeros(3, 2)
    U_g = rng.normal(size=(2, 3))
    p = LstmParams(**{**p.arrays(), "U_g": U_g})
    x = rng.normal(size=3)
    h1 = forward_lstm(p, x[None, :]).h[0]
    assert np.allclose(h1, 0.5 * np.tanh(0.5 * np.tanh(U_g @ x)), rtol=0, atol=1e-15)


def test_empty_sequence_rejected():
    with pytest.raises(ValueError):
        forward_lstm(LstmParams.zeros(2, 2), np.zeros((0, 2)))


def test_non_finite_reports_timestep():
    p = LstmParams.zeros(1, 1)
    with pytest.raises(LstmNumericError) as info:
        forward_lstm(p, np.array([[0.0], [np.nan], [0.0]]))
    assert info.value.timestep == 1


def test_trace_consistency_and_ranges(rng):
    params = random_model(rng, 5, 4, scale=1.5)
    trace = forward(params, random_sentence(rng, 9))
    for d in (trace.left, trace.right):
        d.check_consistency()
        for gate in (d.i, d.f, d.o):
            assert np.all((gate > 0) & (gate < 1))
        assert np.all(np.abs(d.g) < 1)
    assert np.array_equal(trace.hidden, np.concatenate([trace.left.h[-1], trace.right.h[-1]]))
    assert np.allclose(trace.scores, params.W_out @ trace.hidden + params.b_out, rtol=0, atol=1e-15)


def test_right_lstm_reads_reversed(rng):
    params = random_model(rng, 3, 3)
    trace = forward(params, random_sentence(rng, 6))
    assert np.array_equal(trace.right.inputs, trace.left.inputs[::-1])


def test_forward_is_deterministic(rng):
    params = random_model(rng, 4, 4)
    s = random_sentence(rng, 7)
    a, b = forward(params, s), forward(params, s)
    assert a.scores.tobytes() == b.scores.tobytes() and a.left.pre.tobytes() == b.left.pre.tobytes()


def test_palindrome_with_tied_directions(rng):
    params = random_model(rng, 3, 4)
    params = ModelParams(params.left, params.left, params.embeddings, params.vocab, params.W_out, params.b_out)
    trace = forward(params, Sentence(("tok1", "tok2", "tok1")))
    assert np.array_equal(trace.left.h[-1], trace.right.h[-1])


def test_mirror_symmetry_of_scores(rng):
    for _ in range(20):
        params = random_model(rng, 4, 5, scale=1.0)
        s = random_sentence(rng, int(rng.integers(1, 9)))
        mirrored = forward(params.swapped(), Sentence(s.tokens[::-1]))
        assert np.allclose(forward(params, s).scores, mirrored.scores, rtol=0, atol=1e-12)


def test_predict_ties_and_argmax(rng):
    assert argmax([0.1, 2.0, -1, 0, 0]) == 1
    assert argmax([1, 1, 0, 0, 0]) == 0
    params = random_model(rng, 3, 3)
    assert predict(params, Sentence(("tok0",))) == argmax(forward(params, Sentence(("tok0",))).scores)


def test_model_validation(rng):
    params = random_model(rng, 3, 3)
    with pytest.raises(ValueError):
        ModelParams(params.left, params.right, params.embeddings, params.vocab,
                    params.W_out[:, :4], params.b_out)
    with pytest.raises(ValueError):
        ModelParams.random(("a", DELETED), 2, 2, 2, rng)
    with pytest.raises(ValueError):
        LstmParams(**{**params.left.arrays(), "U_i": np.zeros((2, 3))})
