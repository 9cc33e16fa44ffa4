import numpy as np
import pytest

from bilstm_lrp.data import Sentence
from bilstm_lrp.explain import (ForwardMismatchError, LrpConfig, backward_gradients, explain,
                                lrp_bilstm, lrp_linear, lrp_lstm, lrp_multiplicative, sa_relevance)
from bilstm_lrp.model import ModelParams, forward

from oracles import bias_free, brute_force_lrp, fd_input_gradient, random_model, random_sentence


# ------------------------------------------------------------------ gradients

@pytest.mark.parametrize("E,H,T", [(1, 1, 1), (2, 3, 4), (5, 4, 7), (8, 8, 10)])
def test_gradients_match_finite_differences(rng, E, H, T):
    params = random_model(rng, E, H, scale=0.9)
    s = random_sentence(rng, T)
    for c in range(params.n_classes):
        g = backward_gradients(forward(params, s), params, c)
        fd = fd_input_gradient(params, s, c)
        assert np.linalg.norm(g - fd) <= 1e-7 * max(np.linalg.norm(fd), 1e-12)


def test_constant_output_has_zero_gradient(rng):
    params = random_model(rng, 3, 3)
    params = ModelParams(params.left, params.right, params.embeddings, params.vocab,
                         np.zeros_like(params.W_out), params.b_out)
    trace = forward(params, random_sentence(rng, 5))
    assert not backward_gradients(trace, params, 2).any()
    assert not sa_relevance(trace, params, 2).word_relevances.any()


def test_class_out_of_range(rng):
    params = random_model(rng, 3, 3)
    trace = forward(params, random_sentence(rng, 3))
    with pytest.raises(ValueError):
        backward_gradients(trace, params, 5)


# ------------------------------------------------------------------------ SA

def test_sa_invariants(rng):
    params = random_model(rng, 4, 4, scale=1.0)
    trace = forward(params, random_sentence(rng, 8))
    res = sa_relevance(trace, params, 1)
    g = backward_gradients(trace, params, 1)
    assert np.all(res.word_relevances >= 0)
    assert np.allclose(res.input_relevances, g ** 2, rtol=0, atol=0)
    assert np.allclose(res.word_relevances, res.input_relevances.sum(axis=1), rtol=1e-12, atol=0)
    assert np.allclose(res.word_relevances, res.left_word_relevances + res.right_word_relevances,
                       rtol=1e-12, atol=1e-15)


def test_sa_ranking_matches_finite_differences(rng):
    params = random_model(rng, 4, 4, scale=1.0)
    s = random_sentence(rng, 8)
    res = sa_relevance(forward(params, s), params, 3)
    fd = (fd_input_gradient(params, s, 3) ** 2).sum(axis=1)
    assert list(np.argsort(-res.word_relevances)) == list(np.argsort(-fd))


def test_sa_scales_quadratically_with_output_row(rng):
    params = random_model(rng, 4, 4, scale=1.0)
    s = random_sentence(rng, 6)
    k = 3.0
    W_out = params.W_out.copy()
    W_out[2] *= k
    scaled = ModelParams(params.left, params.right, params.embeddings, params.vocab, W_out, params.b_out)
    a = sa_relevance(forward(params, s), params, 2).word_relevances
    b = sa_relevance(forward(scaled, s), scaled, 2).word_relevances
    assert np.allclose(b, k * k * a, rtol=1e-12, atol=0)
    assert list(np.argsort(-a)) == list(np.argsort(-b))


# ----------------------------------------------------------------- lrp_linear

def test_lrp_linear_examples():
    assert np.allclose(lrp_linear([1.0], [[1.0]], [0.0], [1.0], [1.0], eps=0.0), [1.0])
    R = lrp_linear([2.0, -1.0], [[1.0, 1.0]], [0.0], [1.0], [1.0], eps=0.0, delta=0.0)
    assert np.allclose(R, [2.0, -1.0], rtol=0, atol=1e-15)


def test_lrp_linear_conservation_and_closed_form(rng):
    for _ in range(50):
        W, b, z = rng.normal(size=(1, 4)), rng.normal(size=1), rng.normal(size=4)
        zu = W @ z + b
        R = rng.normal(size=1)
        assert lrp_linear(z, W, b, zu, R, eps=0.0, delta=1.0).sum() == pytest.approx(R[0], rel=1e-12)
        want = R[0] * (zu[0] - b[0]) / zu[0]
        assert lrp_linear(z, W, b, zu, R, eps=0.0, delta=0.0).sum() == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_lrp_linear_epsilon_uses_sign_with_zero_positive():
    # z_j = 0 exactly: sign is +1, so the denominator is +eps
    R = lrp_linear([1.0, -1.0], [[1.0, 1.0]], [0.0], [0.0], [1.0], eps=0.5, delta=0.0, N=2)
    assert np.allclose(R, [(1.0 + 0.25) / 0.5, (-1.0 + 0.25) / 0.5])


def test_lrp_linear_zero_denominator_sends_nothing():
    R = lrp_linear([1.0, -1.0], [[1.0, 1.0]], [0.0], [0.0], [3.0], eps=0.0)
    assert np.array_equal(R, [0.0, 0.0])


def test_lrp_linear_checks_wiring():
    with pytest.raises(ForwardMismatchError):
        lrp_linear([1.0], [[1.0]], [0.0], [1.1], [1.0])
    with pytest.raises(ValueError):
        lrp_linear([1.0, 2.0], [[1.0]], [0.0], [1.0], [1.0])


def test_multiplicative_rule():
    assert lrp_multiplicative(5.0) == (0.0, 5.0)
    assert lrp_multiplicative(0.0) == (0.0, 0.0)
    gate, source = lrp_multiplicative(np.array([1.0, -2.0]))
    assert np.array_equal(gate, [0, 0]) and np.array_equal(source, [1, -2])


# -------------------------------------------------------------- LSTM wiring

def test_lstm_step_conserves_without_stabiliser(rng):
    """eps=0, delta=1: what leaves h_t and c_t equals what reaches c_{t-1} and g_t."""
    params = random_model(rng, 3, 4, scale=1.0)
    trace = forward(params, random_sentence(rng, 5))
    rel = lrp_lstm(trace.left, params.left, rng.normal(size=4), eps=0.0, delta=1.0)
    for t in range(1, 5):
        inflow = rel.c[t].sum()  # c already holds R_h[t] plus the carry from t+1
        outflow = rel.g[t].sum() + (rel.c[t - 1].sum() - rel.h[t - 1].sum())
        assert inflow == pytest.approx(outflow, rel=1e-10)


def test_zero_top_relevance_gives_zero(rng):
    params = random_model(rng, 3, 4)
    trace = forward(params, random_sentence(rng, 5))
    rel = lrp_lstm(trace.left, params.left, np.zeros(4))
    assert not rel.inputs.any() and rel.boundary == 0.0


def test_zero_score_gives_zero_relevance(rng):
    params = random_model(rng, 3, 3)
    s = random_sentence(rng, 4)
    b_out = params.b_out.copy()
    b_out[1] -= forward(params, s).scores[1]
    shifted = ModelParams(params.left, params.right, params.embeddings, params.vocab, params.W_out, b_out)
    trace = forward(shifted, s)
    trace.scores[1] = 0.0  # remove rounding residue of the shift
    res = lrp_bilstm(trace, shifted, LrpConfig(1, epsilon=0.0))
    assert np.array_equal(res.word_relevances, np.zeros(4))


def test_global_conservation_bias_free(rng):
    for _ in range(10):
        params = bias_free(random_model(rng, 4, 5, scale=1.0))
        trace = forward(params, random_sentence(rng, 7))
        res = lrp_bilstm(trace, params, LrpConfig(3, epsilon=0.0, delta=1.0))
        assert res.word_relevances.sum() == pytest.approx(trace.scores[3], rel=1e-8)
        assert res.boundary_relevance == pytest.approx(0.0, abs=1e-12)


def test_gates_receive_nothing(rng):
    params = random_model(rng, 3, 3, scale=1.0)
    res = lrp_bilstm(forward(params, random_sentence(rng, 6)), params, LrpConfig(0))
    for side in ("left", "right"):
        for gate in "ifo":
            assert not getattr(res.details[side], gate).any()


@pytest.mark.parametrize("eps,delta", [(0.0, 0.0), (0.001, 0.0), (0.01, 1.0)])
def test_matches_brute_force_on_longer_sentences(rng, eps, delta):
    params = random_model(rng, 3, 2, scale=1.0)
    s = random_sentence(rng, 4)
    got = lrp_bilstm(forward(params, s), params, LrpConfig(4, eps, delta)).word_relevances
    assert np.allclose(got, brute_force_lrp(params, s, 4, eps, delta), rtol=0, atol=1e-10)


def test_result_bookkeeping(rng):
    params = random_model(rng, 4, 3, scale=1.0)
    res = explain(params, random_sentence(rng, 6, label=2), "lrp")
    assert res.target_class == 2
    assert res.output_relevance == res.scores[2]
    assert np.allclose(res.word_relevances, res.input_relevances.sum(axis=1), rtol=1e-12, atol=1e-15)
    assert np.allclose(res.word_relevances, res.left_word_relevances + res.right_word_relevances,
                       rtol=1e-12, atol=1e-15)
    assert res.input_total == pytest.approx(res.input_relevances.sum(), rel=1e-12)


def test_mirror_symmetry(rng):
    params = random_model(rng, 4, 4, scale=1.0)
    s = random_sentence(rng, 7)
    for method in ("sa", "lrp", "lrp_cons"):
        a = explain(params, s, method, 0)
        b = explain(params.swapped(), Sentence(s.tokens[::-1]), method, 0)
        assert np.allclose(a.word_relevances, b.word_relevances[::-1], rtol=0, atol=1e-10)
        assert np.allclose(a.left_word_relevances, b.right_word_relevances[::-1], rtol=0, atol=1e-10)


def test_target_resolution(rng):
    params = random_model(rng, 3, 3)
    labelled = random_sentence(rng, 4, label=1)
    pred = forward(params, labelled).predicted
    assert explain(params, labelled).target_class == 1
    assert explain(params, labelled, target="pred").target_class == pred
    assert explain(params, labelled.tokens).target_class == pred
    with pytest.raises(ValueError):
        explain(params, labelled.tokens, target="true")
    with pytest.raises(ValueError):
        explain(params, labelled, method="occlusion")


def test_lrp_cons_is_delta_one(rng):
    params = random_model(rng, 3, 3)
    s = random_sentence(rng, 5)
    res = explain(params, s, "lrp_cons", 0)
    assert res.method == "lrp_cons" and res.delta == 1.0
    direct = lrp_bilstm(forward(params, s), params, LrpConfig(0, 0.001, 1.0))
    assert np.array_equal(res.word_relevances, direct.word_relevances)


def test_lrp_config_validation():
    with pytest.raises(ValueError):
        LrpConfig(epsilon=-1.0)
    with pytest.raises(ValueError):
        LrpConfig(delta=0.5)
