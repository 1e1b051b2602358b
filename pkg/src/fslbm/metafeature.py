"""Binary meta-feature templates: yes/no rules over raw tabular records.

A template is an ordered list of rules; rule 0 produces the most significant
bit. Rules are ranked by how well a single bit predicts the label on its own.
"""
from __future__ import annotations

import csv
import math
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from .bitcode import Codeword, check_width

Record = Mapping[str, str]
RULE_KINDS = ("threshold", "equals", "presence")
TEMPLATE_HEADER = "FSLBM-TPL v1"


class EncodingError(ValueError):
    pass


class InsufficientFeaturesError(ValueError):
    pass


class TemplateFormatError(ValueError):
    pass


def _present(value: str | None) -> bool:
    return value is not None and value.strip() != ""


def _as_float(value: str) -> float | None:
    try:
        x = float(value)
    except (TypeError, ValueError):
        return None
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class BinRule:
    """``threshold``: value > param; ``equals``: value == param; ``presence``: non-empty."""

    kind: str
    column: str
    param: str = ""

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown rule kind {self.kind!r}")
        if self.kind == "threshold" and _as_float(self.param) is None:
            raise ValueError(f"threshold rule needs a numeric cutpoint, got {self.param!r}")
        if any(c in self.column + self.param for c in "\t\n"):
            raise ValueError("rule column and parameter cannot contain tabs or newlines")

    def evaluate(self, record: Record) -> bool:
        if self.column not in record:
            raise EncodingError(f"rule {self} needs column {self.column!r}, missing from record")
        value = record[self.column]
        if self.kind == "presence":
            return _present(value)
        if not _present(value):
            return False
        if self.kind == "equals":
            return value.strip() == self.param
        x = _as_float(value)
        if x is None:
            raise EncodingError(f"rule {self} got non-numeric value {value!r} in column {self.column!r}")
        return x > float(self.param)

    def __str__(self) -> str:
        if self.kind == "threshold":
            return f"{self.column}>{self.param}"
        if self.kind == "equals":
            return f"{self.column}=={self.param}"
        return f"has_{self.column}"


@dataclass(frozen=True)
class MetaFeatureTemplate:
    rules: tuple[BinRule, ...]
    scores: tuple[float, ...]

    def __post_init__(self):
        check_width(len(self.rules))
        if len(self.scores) != len(self.rules):
            raise ValueError("need one score per rule")
        if len(set(self.rules)) != len(self.rules):
            raise ValueError("template rules must be distinct")

    @property
    def f(self) -> int:
        return len(self.rules)

    def to_text(self) -> str:
        lines = [f"{TEMPLATE_HEADER} f={self.f}"]
        for rank, (rule, score) in enumerate(zip(self.rules, self.scores)):
            lines.append(f"{rank}\t{rule.kind}\t{rule.column}\t{rule.param}\t{score!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MetaFeatureTemplate":
        lines = text.splitlines()
        if not lines or not lines[0].startswith(TEMPLATE_HEADER + " f="):
            raise TemplateFormatError(f"missing '{TEMPLATE_HEADER} f=<f>' header")
        try:
            f = int(lines[0][len(TEMPLATE_HEADER) + 3 :])
        except ValueError:
            raise TemplateFormatError(f"bad header {lines[0]!r}") from None
        rules, scores = [], []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise TemplateFormatError(f"line {lineno}: expected 5 tab-separated fields")
            rank, kind, column, param, score = parts
            try:
                if int(rank) != len(rules):
                    raise TemplateFormatError(f"line {lineno}: rank {rank} out of order")
                rules.append(BinRule(kind, column, param))
                scores.append(float(score))
            except ValueError as exc:
                raise TemplateFormatError(f"line {lineno}: {exc}") from None
        if len(rules) != f:
            raise TemplateFormatError(f"header says f={f} but {len(rules)} rules follow")
        try:
            return cls(tuple(rules), tuple(scores))
        except ValueError as exc:
            raise TemplateFormatError(str(exc)) from None


def encode(template: MetaFeatureTemplate, record: Record) -> Codeword:
    bits = 0
    for rule in template.rules:
        bits = (bits << 1) | rule.evaluate(record)
    return Codeword(bits, template.f)


def rule_error(rule: BinRule, records: Sequence[Record], labels: Sequence[Sequence[float]]) -> float:
    """1 - accuracy of predicting the majority label for each value of the rule's bit.

    ``labels`` rows are per-class weights, so fuzzy records count fractionally.
    """
    mass: list[list[float]] = [[], []]
    for record, weights in zip(records, labels):
        bucket = mass[rule.evaluate(record)]
        if not bucket:
            bucket.extend([0.0] * len(weights))
        for i, w in enumerate(weights):
            bucket[i] += w
    total = math.fsum(sum(b) for b in mass)
    if total <= 0:
        raise ValueError("no label mass to score against")
    correct = math.fsum(max(b) for b in mass if b)
    return max(0.0, 1.0 - correct / total)


def rank_and_select(
    candidates: Sequence[BinRule],
    records: Sequence[Record],
    labels: Sequence[Sequence[float]],
    f: int,
    error_tolerance: float = 1.0,
) -> MetaFeatureTemplate:
    """Keep the ``f`` lowest-error candidates, best first; ties keep input order.

    Candidates above ``error_tolerance`` are dropped only if at least ``f``
    remain. Duplicate candidates are scored once.
    """
    check_width(f)
    unique = list(dict.fromkeys(candidates))
    if len(unique) < f:
        raise InsufficientFeaturesError(f"need {f} distinct candidate rules, got {len(unique)}")
    if len(records) != len(labels):
        raise ValueError("records and labels differ in length")
    scored = [(rule_error(r, records, labels), pos, r) for pos, r in enumerate(unique)]
    within = [s for s in scored if s[0] <= error_tolerance]
    pool = within if len(within) >= f else scored
    best = sorted(pool, key=lambda s: (s[0], s[1]))[:f]
    return MetaFeatureTemplate(tuple(s[2] for s in best), tuple(s[0] for s in best))


def auto_candidates(
    records: Sequence[Record], columns: Sequence[str], top_k: int = 3
) -> list[BinRule]:
    """Median split for numeric columns, one-vs-rest equality for the ``top_k``
    most frequent values of categorical ones, plus a presence rule for any
    column with missing values."""
    rules: list[BinRule] = []
    for col in columns:
        values = [r.get(col) for r in records]
        present = [v.strip() for v in values if _present(v)]
        if len(present) < len(values):
            rules.append(BinRule("presence", col))
        if not present:
            continue
        numbers = [_as_float(v) for v in present]
        if all(x is not None for x in numbers):
            rules.append(BinRule("threshold", col, repr(float(statistics.median(numbers)))))
        else:
            for value, _ in Counter(present).most_common(top_k):
                rules.append(BinRule("equals", col, value))
    return rules


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EncodingError(f"{path}: empty CSV (no header row)")
        rows = [dict(r) for r in reader]
    return list(reader.fieldnames), rows
