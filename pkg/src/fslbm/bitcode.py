"""Fixed-width binary codewords, Hamming distance and Hamming-ball enumeration.

Bit positions are counted from the least significant bit (position 0). In the
text form the leftmost character is the most significant bit, which is
feature 1 of a meta-feature template.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

MAX_WIDTH = 32
RADIUS_WARN_ABOVE = 4
_U64_MAX = (1 << 64) - 1


class ContractError(ValueError):
    """An operation was called outside its preconditions."""


def check_width(f: int) -> int:
    if not isinstance(f, (int, np.integer)) or not 1 <= f <= MAX_WIDTH:
        raise ContractError(f"codeword width must be in [1, {MAX_WIDTH}], got {f!r}")
    return int(f)


def check_radius(e: int, f: int) -> int:
    if not isinstance(e, (int, np.integer)) or not 0 <= e <= f:
        raise ContractError(f"Hamming radius must be in [0, {f}], got {e!r}")
    if e > RADIUS_WARN_ABOVE:
        warnings.warn(
            f"radius {e} > {RADIUS_WARN_ABOVE}: ball holds {ball_size(f, e)} codewords per point",
            RuntimeWarning,
            stacklevel=3,
        )
    return int(e)


@dataclass(frozen=True, slots=True)
class Codeword:
    bits: int
    width: int

    def __post_init__(self):
        check_width(self.width)
        if self.bits < 0 or self.bits >> self.width:
            raise ContractError(f"bits {self.bits:#x} do not fit in {self.width} bits")

    @classmethod
    def from_binary(cls, text: str, width: int | None = None) -> "Codeword":
        text = text.strip()
        if not text or any(ch not in "01" for ch in text):
            raise ContractError(f"not a binary string: {text!r}")
        if width is not None and len(text) != width:
            raise ContractError(f"expected {width} bits, got {len(text)} in {text!r}")
        return cls(int(text, 2), check_width(len(text)))

    @classmethod
    def from_hex(cls, text: str, width: int) -> "Codeword":
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        digits = (check_width(width) + 3) // 4
        if len(text) != digits:
            raise ContractError(f"expected {digits} hex digits for width {width}, got {text!r}")
        try:
            value = int(text, 16)
        except ValueError:
            raise ContractError(f"not a hex string: {text!r}") from None
        return cls(value, width)

    def to_binary(self) -> str:
        return format(self.bits, f"0{self.width}b")

    def to_hex(self) -> str:
        return format(self.bits, f"0{(self.width + 3) // 4}x")

    def __str__(self) -> str:
        return self.to_binary()


def hamming_distance(a: Codeword, b: Codeword) -> int:
    """Number of bit positions where ``a`` and ``b`` differ."""
    if a.width != b.width:
        raise ContractError(f"width mismatch: {a.width} vs {b.width}")
    return (a.bits ^ b.bits).bit_count()


def normalized_distance(a: Codeword, b: Codeword) -> float:
    return hamming_distance(a, b) / a.width


def popcount(arr: np.ndarray) -> np.ndarray:
    return np.bitwise_count(arr)


def ball_size(f: int, e: int) -> int:
    """Exact number of codewords within distance ``e`` of any ``f``-bit center."""
    check_width(f)
    if not 0 <= e <= f:
        raise ContractError(f"Hamming radius must be in [0, {f}], got {e!r}")
    total = sum(math.comb(f, k) for k in range(e + 1))
    if total > _U64_MAX:
        raise OverflowError(f"ball size for f={f}, e={e} does not fit in 64 bits")
    return total


def _flip_masks(f: int, k: int) -> Iterator[int]:
    # lexicographic order over position tuples
    for positions in itertools.combinations(range(f), k):
        mask = 0
        for p in positions:
            mask |= 1 << p
        yield mask


def ball_enumerate(center: Codeword, e: int) -> Iterator[Codeword]:
    """Yield every codeword within distance ``e`` of ``center`` exactly once.

    Order: the center, then all distance-1 neighbours by ascending flipped
    position, then distance-2 neighbours in lexicographic position-pair
    order, and so on.
    """
    check_radius(e, center.width)
    yield center
    for k in range(1, e + 1):
        for mask in _flip_masks(center.width, k):
            yield Codeword(center.bits ^ mask, center.width)


@lru_cache(maxsize=64)
def ball_masks(f: int, e: int) -> tuple[np.ndarray, np.ndarray]:
    """XOR masks of a radius-``e`` ball and the distance of each, in enumeration order.

    The arrays are shared between callers and marked read-only.
    """
    check_width(f)
    check_radius(e, f)
    masks = np.fromiter(
        itertools.chain.from_iterable(_flip_masks(f, k) for k in range(e + 1)),
        dtype=np.uint32,
        count=ball_size(f, e),
    )
    dists = np.repeat(
        np.arange(e + 1, dtype=np.uint8), [math.comb(f, k) for k in range(e + 1)]
    )
    masks.flags.writeable = False
    dists.flags.writeable = False
    return masks, dists


@lru_cache(maxsize=64)
def shell_masks(f: int, d: int) -> np.ndarray:
    """XOR masks with exactly ``d`` set bits, in enumeration order."""
    check_width(f)
    if not 0 <= d <= f:
        raise ContractError(f"shell distance must be in [0, {f}], got {d!r}")
    masks = np.fromiter(_flip_masks(f, d), dtype=np.uint32, count=math.comb(f, d))
    masks.flags.writeable = False
    return masks
