"""Codeword dataset files and atomic output.

One record per line: ``<binary string>\\t<label[:weight][,label[:weight]...]>``.
Blank lines and lines starting with ``#`` are skipped.
"""
from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .bitcode import Codeword, ContractError
from .labels import LabelDistribution, normalize, parse_weights


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Record:
    line: int
    code: Codeword
    weights: tuple[float, ...] | None


def iter_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if line.strip() and not line.lstrip().startswith("#"):
                yield lineno, line


def parse_record(lineno: int, line: str, width: int | None, need_labels: bool) -> Record:
    code_text, _, label_text = line.partition("\t")
    try:
        code = Codeword.from_binary(code_text, width)
    except ContractError as exc:
        raise DataError(f"line {lineno}: {exc}") from None
    if not label_text.strip():
        if need_labels:
            raise DataError(f"line {lineno}: missing label field")
        return Record(lineno, code, None)
    try:
        weights = tuple(parse_weights(label_text))
    except ValueError as exc:
        raise DataError(f"line {lineno}: {exc}") from None
    return Record(lineno, code, weights)


def read_dataset(path, width: int | None = None) -> list[Record]:
    """Labeled records; the width is fixed by ``width`` or by the first line."""
    out: list[Record] = []
    for lineno, line in iter_lines(path):
        rec = parse_record(lineno, line, width, need_labels=True)
        width = rec.code.width
        out.append(rec)
    return out


def to_points(records: list[Record], k: int | None = None) -> tuple[list[tuple[Codeword, LabelDistribution]], int]:
    """Pad weight vectors to a common class count and normalize them."""
    widest = max((len(r.weights) for r in records), default=2)
    if k is None:
        k = widest
    points = []
    for r in records:
        w = list(r.weights)
        if any(w[k:]):
            raise DataError(f"line {r.line}: label id >= class count {k}")
        w = (w + [0.0] * k)[:k]
        points.append((r.code, normalize(w)))
    return points, k


def render_record(code: Codeword, weights) -> str:
    labels = ",".join(f"{i}:{w:g}" for i, w in enumerate(weights) if w > 0)
    return f"{code.to_binary()}\t{labels}"


def atomic_write(path, data: bytes | str):
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
