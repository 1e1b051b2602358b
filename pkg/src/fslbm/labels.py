"""Fuzzy label distributions.

Raw per-class accumulators ("label weights") are plain float sequences or
numpy rows; they become a :class:`LabelDistribution` only when presented.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

SUM_TOL = 1e-9


class EmptyDistributionError(ValueError):
    """Normalization was asked for a weight vector with no positive mass."""


@dataclass(frozen=True, slots=True)
class LabelDistribution:
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.probs) < 2:
            raise ValueError(f"need at least 2 classes, got {len(self.probs)}")
        for p in self.probs:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability out of [0, 1]: {p!r}")
        if abs(math.fsum(self.probs) - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(self.probs)!r}, not 1")

    @property
    def k(self) -> int:
        return len(self.probs)

    def __str__(self) -> str:
        return render(self)


def normalize(raw: Sequence[float]) -> LabelDistribution:
    weights = [float(w) for w in raw]
    if any(w < 0 or math.isnan(w) for w in weights):
        raise ValueError(f"label weights must be non-negative: {weights!r}")
    total = math.fsum(weights)
    if not total > 0:
        raise EmptyDistributionError("cannot normalize an all-zero weight vector")
    return LabelDistribution(tuple(w / total for w in weights))


def crisp(label: int, k: int) -> LabelDistribution:
    if not 0 <= label < k:
        raise ValueError(f"label {label} outside [0, {k})")
    return LabelDistribution(tuple(1.0 if i == label else 0.0 for i in range(k)))


def fuzziness(d: LabelDistribution) -> float:
    """0 for a one-hot distribution, 1 for the uniform one.

    ``(1 - max p) * k / (k - 1)``, clipped to [0, 1] against rounding.
    """
    k = d.k
    value = (1.0 - max(d.probs)) * k / (k - 1)
    return min(1.0, max(0.0, value))


def argmax_label(d: LabelDistribution) -> int:
    # list.index returns the first maximum, i.e. the lowest label id on ties
    return d.probs.index(max(d.probs))


def merge(a: Sequence[float], b: Sequence[float]) -> list[float]:
    if len(a) != len(b):
        raise ValueError(f"class count mismatch: {len(a)} vs {len(b)}")
    return [x + y for x, y in zip(a, b)]


def total_variation(p: LabelDistribution, q: LabelDistribution) -> float:
    if p.k != q.k:
        raise ValueError(f"class count mismatch: {p.k} vs {q.k}")
    return 0.5 * math.fsum(abs(x - y) for x, y in zip(p.probs, q.probs))


def render(d: LabelDistribution) -> str:
    return ",".join(f"{i}:{p:.4f}" for i, p in enumerate(d.probs))


def parse_weights(text: str, k: int | None = None) -> list[float]:
    """Parse ``label[:weight][,label[:weight]...]`` into a raw weight vector.

    A bare label implies weight 1. The vector has length ``k`` when given,
    else ``max(label) + 1`` (at least 2).
    """
    found: dict[int, float] = {}
    for part in text.strip().split(","):
        part = part.strip()
        if not part:
            raise ValueError(f"empty label entry in {text!r}")
        name, sep, weight = part.partition(":")
        try:
            label = int(name)
            value = float(weight) if sep else 1.0
        except ValueError:
            raise ValueError(f"bad label entry {part!r}") from None
        if label < 0:
            raise ValueError(f"negative label id {label}")
        if label in found:
            raise ValueError(f"label {label} given twice in {text!r}")
        if not value >= 0 or math.isinf(value):
            raise ValueError(f"bad weight for label {label}: {weight!r}")
        found[label] = value
    size = k if k is not None else max(2, max(found) + 1)
    if max(found) >= size:
        raise ValueError(f"label {max(found)} outside [0, {size})")
    weights = [0.0] * size
    for label, value in found.items():
        weights[label] = value
    if not any(weights):
        raise EmptyDistributionError(f"no positive weight in {text!r}")
    return weights
