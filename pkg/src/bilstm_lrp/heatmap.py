"""Standalone HTML heatmaps of word relevances.

Each token becomes one ``<span>`` whose background is red for positive and
blue for negative relevance.  Opacity is ``|R| / max|R|`` within the
sentence, so the strongest word of every sentence is drawn at full
intensity.  SA relevances are non-negative and always drawn in red.
"""

from __future__ import annotations

import html
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

import numpy as np

from .data import CLASS_NAMES, Sentence
from .explain import RelevanceResult
from .model import argmax

RED = (255, 0, 0)
BLUE = (0, 0, 255)

_STYLE = """\
body { font-family: sans-serif; margin: 1.5em; }
.sentence { display: flex; align-items: baseline; margin: 0.4em 0; }
.meta { flex: 0 0 16em; color: #444; font-size: 0.85em; }
.tokens { line-height: 1.9; }
.tok { padding: 0.1em 0.2em; margin: 0 0.05em; border-radius: 0.2em; }
"""


def token_colors(relevances, method: str = "lrp") -> list[tuple[tuple[int, int, int], float]]:
    """(rgb, alpha) per token, normalised to the sentence's max |R|."""
    R = np.asarray(relevances, dtype=np.float64)
    peak = float(np.abs(R).max()) if R.size else 0.0
    colors = []
    for r in R:
        alpha = abs(float(r)) / peak if peak > 0 else 0.0
        rgb = RED if method == "sa" or r >= 0 else BLUE
        colors.append((rgb, alpha))
    return colors


def class_label(c: Optional[int]) -> str:
    if c is None:
        return "unknown"
    name = CLASS_NAMES[c] if 0 <= c < len(CLASS_NAMES) else f"class {c}"
    return f"{name} ({c})"


def render_sentence(result: RelevanceResult, sentence: Sentence) -> str:
    """One ``<div>`` holding the class header and the coloured tokens."""
    if len(result.word_relevances) != len(sentence.tokens):
        raise ValueError("relevance count does not match the sentence length")
    spans = []
    for tok, r, ((red, green, blue), alpha) in zip(
            sentence.tokens, result.word_relevances, token_colors(result.word_relevances, result.method)):
        spans.append(
            f'<span class="tok" style="background-color: rgba({red},{green},{blue},{alpha:.4f})"'
            f' title="R = {float(r):.6g}">{html.escape(tok)}</span>')
    meta = (f"true: {html.escape(class_label(sentence.label))}<br>"
            f"predicted: {html.escape(class_label(argmax(result.scores)))}<br>"
            f"target: {html.escape(class_label(result.target_class))}, {html.escape(result.method)}")
    return (f'<div class="sentence"><div class="meta">{meta}</div>'
            f'<div class="tokens">{" ".join(spans)}</div></div>')


def heatmap_document(items: Iterable[tuple[RelevanceResult, Sentence]], title: str = "Relevance heatmap") -> str:
    body = "\n".join(render_sentence(result, sentence) for result, sentence in items)
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>{html.escape(title)}</title>\n<style>\n{_STYLE}</style>\n</head>\n"
        f"<body>\n{body}\n</body>\n</html>\n"
    )


def emit_heatmap(result: RelevanceResult, sentence: Sentence,
                 out: Union[None, str, Path, TextIO] = None) -> str:
    """Render one sentence as a complete HTML page; also write it to ``out`` if given."""
    doc = heatmap_document([(result, sentence)])
    write_html(doc, out)
    return doc


def write_html(doc: str, out: Union[None, str, Path, TextIO]) -> None:
    if out is None:
        return
    if isinstance(out, (str, Path)):
        Path(out).write_text(doc, encoding="utf-8")
    else:
        out.write(doc)
