import re

import numpy as np

from bilstm_lrp.data import Sentence
from bilstm_lrp.explain import explain
from bilstm_lrp.heatmap import BLUE, RED, emit_heatmap, heatmap_document, token_colors

from oracles import random_model, random_sentence


def _alphas(doc):
    return [(int(r), int(g), int(b), float(a)) for r, g, b, a in
            re.findall(r"rgba\((\d+),(\d+),(\d+),([0-9.]+)\)", doc)]


def test_zero_relevances_have_zero_intensity():
    assert [a for _, a in token_colors([0.0, 0.0])] == [0.0, 0.0]


def test_single_negative_token_is_full_blue():
    assert token_colors([-1.0]) == [(BLUE, 1.0)]


def test_normalised_per_sentence():
    colors = token_colors([2.0, -1.0, 0.5])
    assert colors == [(RED, 1.0), (BLUE, 0.5), (RED, 0.25)]


def test_sa_has_no_blue(rng):
    params = random_model(rng, 3, 3)
    s = random_sentence(rng, 6, label=1)
    doc = emit_heatmap(explain(params, s, "sa"), s)
    assert all((r, g, b) == RED for r, g, b, _ in _alphas(doc))


def test_document_is_standalone(rng, tmp_path):
    params = random_model(rng, 3, 3)
    s = Sentence(("tok1", "<b>", "tok2"), 3)
    res = explain(params, s, "lrp")
    doc = emit_heatmap(res, s, tmp_path / "h.html")
    assert (tmp_path / "h.html").read_text(encoding="utf-8") == doc
    assert doc.count('class="tok"') == 3 and "&lt;b&gt;" in doc
    assert "http" not in doc and "<script" not in doc and "src=" not in doc
    assert "true: positive (3)" in doc
    assert f"predicted: " in doc
    peak = max(a for *_, a in _alphas(doc))
    assert peak == 1.0


def test_multi_sentence_document(rng):
    params = random_model(rng, 3, 3)
    sentences = [random_sentence(rng, 4, label=0), random_sentence(rng, 5, label=4)]
    doc = heatmap_document((explain(params, s), s) for s in sentences)
    assert doc.count('class="sentence"') == 2 and doc.count('class="tok"') == 9
