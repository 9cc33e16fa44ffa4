"""Command-line entry point: ``bilstm-lrp <command> ...``."""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io
from .data import Corpus, Sentence
from .evaluation import (ORDERS, SUBSETS, DeletionConfig, deletion_experiment, extremal_words,
                         positional_distribution)
from .explain import METHODS, explain
from .heatmap import heatmap_document, write_html
from .model import UNK, forward
from .synthetic import SyntheticCorpusSpec, generate_synthetic_corpus
from .train import TrainConfig, init_model, train

log = logging.getLogger("bilstm_lrp")


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _target(text: str):
    if text in ("true", "pred"):
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"target must be 'true', 'pred' or a class index, got {text!r}") from None


def _load(args) -> tuple:
    params = io.load_model(args.model)
    corpus = io.load_corpus(args.corpus, params.n_classes)
    return params, corpus


def cmd_synth(args) -> None:
    values = io.load_config(args.config) if args.config else {}
    spec = io.apply_config(SyntheticCorpusSpec, values, seed=args.seed)
    train_set, test_set = generate_synthetic_corpus(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.save_corpus(train_set, out / "train.tsv")
    io.save_corpus(test_set, out / "test.tsv")
    print(f"wrote {len(train_set)} training and {len(test_set)} test sentences to {out}")


def cmd_train(args) -> None:
    values = io.load_config(args.config) if args.config else {}
    cfg = io.apply_config(TrainConfig, values, seed=args.seed, epochs=args.epochs)
    corpus = io.load_corpus(args.corpus)
    test = io.load_corpus(args.test) if args.test else None
    model = init_model(corpus.vocabulary([UNK]), cfg, args.classes)
    params, history = train(model, corpus, cfg, test)
    io.save_model(params, args.out)
    with _output(args.log) as fh:
        fh.write("epoch\tloss\ttrain_acc\ttest_acc\n")
        for entry in history:
            fh.write(entry.line() + "\n")


def cmd_predict(args) -> None:
    params, corpus = _load(args)
    hits = 0
    with _output(args.out) as fh:
        fh.write("index\tlabel\tpredicted\n")
        for k, s in enumerate(corpus):
            pred = forward(params, s).predicted
            hits += pred == s.label
            fh.write(f"{k}\t{s.label}\t{pred}\n")
        fh.write(f"# accuracy\t{io.fmt(hits / len(corpus))}\n")


def cmd_explain(args) -> None:
    params = io.load_model(args.model)
    if args.sentence is not None:
        corpus = Corpus([Sentence.from_text(args.sentence, args.label)])
    else:
        corpus = io.load_corpus(args.corpus, params.n_classes)
    results = [explain(params, s, args.method, args.target, args.eps, args.delta) for s in corpus]
    with _output(args.out) as fh:
        fh.write("sentence\tposition\ttoken\trelevance\tleft\tright\n")
        for k, (s, res) in enumerate(zip(corpus, results)):
            fh.write(f"# sentence {k}: target {res.target_class}, method {res.method}, "
                     f"output {io.fmt(res.output_relevance)}, sum {io.fmt(float(res.word_relevances.sum()))}\n")
            for t, tok in enumerate(s.tokens):
                fh.write(f"{k}\t{t}\t{tok}\t{io.fmt(res.word_relevances[t])}\t"
                         f"{io.fmt(res.left_word_relevances[t])}\t{io.fmt(res.right_word_relevances[t])}\n")
    if args.heatmap:
        write_html(heatmap_document(zip(results, corpus)), args.heatmap)


def cmd_eval_deletion(args) -> None:
    params, corpus = _load(args)
    cfg = DeletionConfig(max_deletions=args.max_deletions, min_length=args.min_length,
                         runs=args.runs, seed=args.seed, epsilon=args.eps, subset=args.subset)
    curve = deletion_experiment(params, corpus, args.method, args.order, cfg)
    comments = [f"method {curve.method}", f"order {curve.order}", f"subset {curve.subset}",
                f"min_length {curve.min_length}", f"sentences {curve.n_sentences}", f"runs {curve.runs}"]
    with _output(args.out) as fh:
        io.write_tsv(fh, ("k", "accuracy", "std"), curve.rows(), comments)
    if args.plot_data:
        io.write_plot_data(args.plot_data, curve.rows())


def cmd_eval_distribution(args) -> None:
    params, corpus = _load(args)
    target = params.n_classes - 1 if args.target is None else args.target
    dist = positional_distribution(params, corpus, args.method, target, args.min_length, args.eps)
    comments = [f"method {dist.method}", f"target {dist.target_class}", f"sentences {dist.n_sentences}",
                f"normalization {dist.normalization}"]
    rows = [(name, *map(float, values)) for name, values in dist.rows().items()]
    with _output(args.out) as fh:
        io.write_tsv(fh, ("row", *(f"bin{b}" for b in range(len(dist.total)))), rows, comments)
    if args.plot_data:
        io.write_plot_data(args.plot_data, [(b, *(float(v[b]) for v in dist.rows().values()))
                                            for b in range(len(dist.total))])


def cmd_top_words(args) -> None:
    params, corpus = _load(args)
    target = params.n_classes - 1 if args.target is None else args.target
    top, bottom = extremal_words(params, corpus, args.method, target, args.n, args.eps)
    with _output(args.out) as fh:
        fh.write(f"# method {args.method}, target {target}\n")
        fh.write("list\trank\tword\trelevance\tsentence\tposition\n")
        for name, words in (("top", top), ("bottom", bottom)):
            for rank, w in enumerate(words, 1):
                fh.write(f"{name}\t{rank}\t{w.word}\t{io.fmt(w.relevance)}\t{w.sentence}\t{w.position}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bilstm-lrp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    def model_corpus(p):
        p.add_argument("--model", required=True, help="weight archive")
        p.add_argument("--corpus", required=True, help="label<TAB>tokens file")
        p.add_argument("--out", help="output table (default: stdout)")

    def method(p, choices=METHODS):
        p.add_argument("--method", choices=choices, default="lrp")
        p.add_argument("--eps", type=float, default=0.001, help="LRP stabilizer")

    p = add("synth", cmd_synth, "generate the synthetic train/test corpora")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", help="key = value file with corpus settings")
    p.add_argument("--seed", type=int)

    p = add("train", cmd_train, "train a model and write a weight archive")
    p.add_argument("--corpus", required=True)
    p.add_argument("--test", help="held-out corpus reported in the log")
    p.add_argument("--config", help="key = value file with training settings")
    p.add_argument("--out", required=True, help="weight archive to write")
    p.add_argument("--log", help="epoch log (default: stdout)")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)

    p = add("predict", cmd_predict, "classify every sentence of a corpus")
    model_corpus(p)

    p = add("explain", cmd_explain, "per-word relevances for one sentence or a corpus")
    p.add_argument("--model", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--sentence", help="whitespace-tokenized text")
    src.add_argument("--corpus")
    p.add_argument("--label", type=int, help="true class of --sentence")
    method(p)
    p.add_argument("--target", type=_target, default=None, help="true, pred or a class index")
    p.add_argument("--delta", type=float, choices=(0.0, 1.0), help="override the method's delta")
    p.add_argument("--heatmap", help="write an HTML heatmap here")
    p.add_argument("--out")

    p = add("eval-deletion", cmd_eval_deletion, "accuracy after deleting words in relevance order")
    model_corpus(p)
    method(p)
    p.add_argument("--order", choices=ORDERS, default="decreasing")
    p.add_argument("--subset", choices=SUBSETS, help="default: correct, or false for increasing order")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--max-deletions", type=int, default=5)
    p.add_argument("--min-length", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plot-data", help="also write whitespace-separated rows k accuracy std")

    p = add("eval-distribution", cmd_eval_distribution, "relevance mass over ten relative positions")
    model_corpus(p)
    method(p)
    p.add_argument("--target", type=int, help="class index (default: the last class)")
    p.add_argument("--min-length", type=int, default=19)
    p.add_argument("--plot-data", help="also write rows bin total left right")

    p = add("top-words", cmd_top_words, "most and least relevant word occurrences")
    model_corpus(p)
    method(p)
    p.add_argument("--target", type=int, help="class index (default: the last class)")
    p.add_argument("-n", type=int, default=10)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"bilstm-lrp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
