"""File formats: weight archives, corpora, ``key = value`` configs, TSV tables.

Weight archive layout::

    b"BILSTM-LRP-ARCHIVE\\n"
    8-byte little-endian unsigned header length
    UTF-8 JSON header: byte_order, dtype, E, H, C, concat_order, vocab,
        parameters = [{"name", "rows", "cols"}, ...]
    raw float64 payloads, row-major, in manifest order

Vectors are stored as (n, 1).  ``concat_order`` records which direction's
final state feeds the first H columns of ``W_out``; archives written as
``["right", "left"]`` are converted on load.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, TextIO

import numpy as np

from .data import Corpus, Sentence
from .model import LSTM_PARAM_NAMES, ModelParams

MAGIC = b"BILSTM-LRP-ARCHIVE\n"
FORMAT_VERSION = 1


class ArchiveError(ValueError):
    """Malformed weight archive."""


class MissingParameterError(ArchiveError):
    pass


class UnknownParameterError(ArchiveError):
    pass


class ShapeError(ArchiveError):
    pass


class TruncatedPayloadError(ArchiveError):
    pass


class CorpusFormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class ConfigError(ValueError):
    pass


def _expected_shapes(E: int, H: int, C: int, V: int) -> dict[str, tuple[int, int]]:
    by_kind = {"W": (H, H), "U": (H, E), "b": (H, 1)}
    shapes = {f"{side}.{n}": by_kind[n[0]] for side in ("left", "right") for n in LSTM_PARAM_NAMES}
    shapes.update({"embeddings": (V, E), "W_out": (C, 2 * H), "b_out": (C, 1)})
    return shapes


def save_model(params: ModelParams, path) -> None:
    manifest, payloads = [], []
    for name, arr in params.named_arrays():
        mat = arr.reshape(arr.shape[0], -1)
        manifest.append({"name": name, "rows": mat.shape[0], "cols": mat.shape[1]})
        payloads.append(np.ascontiguousarray(mat, dtype="<f8").tobytes())
    header = {
        "format": "bilstm-lrp", "version": FORMAT_VERSION,
        "byte_order": "little", "dtype": "float64",
        "E": params.embedding_dim, "H": params.hidden_size, "C": params.n_classes,
        "concat_order": ["left", "right"],
        "vocab": list(params.vocab),
        "parameters": manifest,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for p in payloads:
            fh.write(p)


def load_model(path) -> ModelParams:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ArchiveError(f"{path}: not a weight archive (bad magic)")
    pos = len(MAGIC)
    if len(data) < pos + 8:
        raise TruncatedPayloadError(f"{path}: truncated header")
    (hlen,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    if len(data) < pos + hlen:
        raise TruncatedPayloadError(f"{path}: truncated header")
    try:
        header = json.loads(data[pos:pos + hlen].decode("utf-8"))
        E, H, C = int(header["E"]), int(header["H"]), int(header["C"])
        vocab = list(header["vocab"])
        manifest = header["parameters"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ArchiveError(f"{path}: malformed header ({exc})") from exc
    pos += hlen

    order = header.get("byte_order", "little")
    if order not in ("little", "big"):
        raise ArchiveError(f"{path}: unsupported byte order {order!r}")
    dtype = np.dtype("<f8" if order == "little" else ">f8")
    expected = _expected_shapes(E, H, C, len(vocab))

    arrays: dict[str, np.ndarray] = {}
    for entry in manifest:
        name, shape = entry["name"], (int(entry["rows"]), int(entry["cols"]))
        if name not in expected:
            raise UnknownParameterError(f"{path}: unknown parameter {name!r}")
        if shape != expected[name]:
            raise ShapeError(f"{path}: parameter {name!r} has shape {shape}, expected {expected[name]}")
        nbytes = shape[0] * shape[1] * 8
        if len(data) < pos + nbytes:
            raise TruncatedPayloadError(f"{path}: payload of {name!r} is truncated")
        arr = np.frombuffer(data, dtype=dtype, count=shape[0] * shape[1], offset=pos)
        arrays[name] = arr.astype(np.float64).reshape(shape)
        pos += nbytes
    missing = [n for n in expected if n not in arrays]
    if missing:
        raise MissingParameterError(f"{path}: missing parameter(s) {', '.join(missing)}")
    if pos != len(data):
        raise ArchiveError(f"{path}: {len(data) - pos} unexpected trailing bytes")

    for name, (rows, cols) in expected.items():
        if cols == 1 and not name == "embeddings":
            arrays[name] = arrays[name].reshape(rows)
    concat = header.get("concat_order", ["left", "right"])
    if concat == ["right", "left"]:
        arrays["W_out"] = np.hstack([arrays["W_out"][:, H:], arrays["W_out"][:, :H]])
    elif concat != ["left", "right"]:
        raise ArchiveError(f"{path}: bad concat_order {concat!r}")
    return ModelParams.from_named_arrays(arrays, vocab)


def load_corpus(path, n_classes: Optional[int] = None) -> Corpus:
    """Read ``label<TAB>token token ...`` lines; tokens are lowercased."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            label_text, sep, text = line.partition("\t")
            if not sep:
                raise CorpusFormatError(path, lineno, "expected label<TAB>tokens")
            try:
                label = int(label_text)
            except ValueError:
                raise CorpusFormatError(path, lineno, f"label {label_text!r} is not an integer") from None
            if label < 0 or (n_classes is not None and label >= n_classes):
                raise CorpusFormatError(path, lineno, f"label {label} outside 0..{(n_classes or 1) - 1}")
            tokens = text.lower().split()
            if not tokens:
                raise CorpusFormatError(path, lineno, "empty token list")
            sentences.append(Sentence(tuple(tokens), label))
    return Corpus(sentences)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in corpus:
            if s.label is None:
                raise ValueError("only labelled corpora can be saved")
            fh.write(f"{s.label}\t{' '.join(s.tokens)}\n")


def load_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip()] = value.strip()
    return out


def _coerce(kind: Any, default: Any, text: str):
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(part.strip() for part in text.split(",") if part.strip())
    return text


def apply_config(cls, values: Mapping[str, Any], **overrides):
    """Build dataclass ``cls`` from string config values plus typed overrides."""
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, text in values.items():
        if key not in known:
            raise ConfigError(f"unknown {cls.__name__} key {key!r}")
        f = known[key]
        try:
            kwargs[key] = _coerce(f.type, f.default, str(text))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {text!r}") from exc
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**kwargs)


def fmt(x: float) -> str:
    """Shortest round-tripping text for a float."""
    return repr(float(x))


def write_tsv(out: TextIO, header: Iterable[str], rows: Iterable[Iterable[Any]],
              comments: Iterable[str] = ()) -> None:
    for c in comments:
        out.write(f"# {c}\n")
    out.write("\t".join(header) + "\n")
    for row in rows:
        out.write("\t".join(fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def write_plot_data(path, rows: Iterable[Iterable[float]]) -> None:
    """Whitespace-separated numbers, one row per line, no header."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(" ".join(fmt(v) for v in row) + "\n")
