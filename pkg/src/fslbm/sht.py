"""Supervised Hash Table: training by Hamming-ball expansion, constant-time fuzzy lookup.

Every training codeword adds ``zeta(d) * label_weight`` to each table slot
within distance ``d <= e`` of it. Slots never touched are absent (not zero),
and a query on an occupied slot returns its normalized weights.

Two storage layouts back the same table:

* ``dense``: a ``(k, 2**f)`` float64 array indexed directly by codeword.
* ``sparse``: sorted unique slot indices plus an ``(n, k)`` weight matrix.

Contributions to one slot are added in training order. Build order, batch
splits and absorb sequences therefore give bit-identical tables whenever the
float additions are exact (crisp labels with a dyadic zeta, for example);
with arbitrary real weights they agree to rounding.
"""
from __future__ import annotations

import math
import struct
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bitcode import (
    Codeword,
    ContractError,
    ball_masks,
    ball_size,
    check_radius,
    check_width,
    shell_masks,
)
from .labels import LabelDistribution, normalize

DEFAULT_MEMORY_BUDGET = 1 << 30
STORAGE_MODES = ("auto", "dense", "sparse")
# (point, ball member) pairs handled per vectorized step
CHUNK_ELEMENTS = 1 << 22

MAGIC = b"FSLBM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<5sBBBHBdQQ")
_CRC = struct.Struct("<I")


class BudgetError(MemoryError):
    """The projected table would exceed the configured memory budget."""


class ModelLoadError(ValueError):
    pass


class VersionError(ModelLoadError):
    pass


class TruncatedError(ModelLoadError):
    pass


class ChecksumError(ModelLoadError):
    pass


@dataclass(frozen=True)
class ZetaPolicy:
    """Weight added per touched slot: ``value`` or ``value / (d + 1)``."""

    kind: str = "constant"
    value: float = 1.0

    KINDS = ("constant", "decay")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ContractError(f"unknown zeta policy {self.kind!r}")
        if not (self.value > 0 and math.isfinite(self.value)):
            raise ContractError(f"zeta must be a positive finite number, got {self.value!r}")

    @property
    def tag(self) -> int:
        return self.KINDS.index(self.kind)

    def weight(self, d: int) -> float:
        return self.value if self.kind == "constant" else self.value / (d + 1)

    def weights(self, dists: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full(dists.shape, self.value)
        return self.value / (dists.astype(np.float64) + 1.0)

    @classmethod
    def parse(cls, text: str) -> "ZetaPolicy":
        """Parse ``const[:value]`` or ``decay[:value]``."""
        name, _, value = text.strip().partition(":")
        kind = {"const": "constant", "constant": "constant", "decay": "decay"}.get(name)
        if kind is None:
            raise ContractError(f"zeta policy must be const or decay, got {text!r}")
        try:
            return cls(kind, float(value) if value else 1.0)
        except ValueError:
            raise ContractError(f"bad zeta value in {text!r}") from None

    def __str__(self) -> str:
        return f"{'const' if self.kind == 'constant' else 'decay'}:{self.value:g}"


@dataclass(frozen=True)
class TrainConfig:
    f: int
    e: int
    zeta: ZetaPolicy = ZetaPolicy()
    # runtime choices, not part of the model's identity
    storage: str = field(default="auto", compare=False)
    memory_budget: int = field(default=DEFAULT_MEMORY_BUDGET, compare=False)

    def __post_init__(self):
        check_width(self.f)
        check_radius(self.e, self.f)
        if self.storage not in STORAGE_MODES:
            raise ContractError(f"storage must be one of {STORAGE_MODES}, got {self.storage!r}")
        if self.memory_budget <= 0:
            raise ContractError("memory budget must be positive")


@dataclass(frozen=True)
class Fallback:
    """Query policy for unoccupied slots: probe up to ``expand`` extra bits away."""

    expand: int = 0

    def __post_init__(self):
        if self.expand < 0:
            raise ContractError("fallback radius must be >= 0")

    @classmethod
    def parse(cls, text: str) -> "Fallback":
        text = text.strip()
        if text == "none":
            return cls(0)
        name, _, n = text.partition(":")
        if name != "expand" or not n.isdigit():
            raise ContractError(f"fallback must be none or expand:N, got {text!r}")
        return cls(int(n))

    def __str__(self) -> str:
        return "none" if self.expand == 0 else f"expand:{self.expand}"


@dataclass(frozen=True)
class Prediction:
    distribution: LabelDistribution | None
    matched: bool
    fallback_radius_used: int | None = None

    @property
    def answered(self) -> bool:
        return self.distribution is not None


def _group_by_key(keys: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stable grouping of uint32 keys.

    Returns ``(order, unique_keys, starts)`` where ``keys[order]`` is sorted
    with ties kept in input order and ``starts`` indexes the first element of
    each run in the sorted sequence.
    """
    n = keys.size
    if n >= 1 << 32:
        raise ContractError("too many elements for one grouping pass")
    packed = (keys.astype(np.uint64) << np.uint64(32)) | np.arange(n, dtype=np.uint64)
    packed.sort()
    order = (packed & np.uint64(0xFFFFFFFF)).astype(np.intp)
    skeys = (packed >> np.uint64(32)).astype(np.uint32)
    if n == 0:
        return order, skeys, np.zeros(0, dtype=np.intp)
    boundary = np.empty(n, dtype=bool)
    boundary[0] = True
    np.not_equal(skeys[1:], skeys[:-1], out=boundary[1:])
    starts = np.flatnonzero(boundary)
    return order, skeys[starts], starts


def _segment_sums(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Per-run column sums of ``values`` (already in grouped order), added strictly left to right."""
    n, k = values.shape
    group = np.zeros(n, dtype=np.intp)
    group[starts[1:]] = 1
    np.cumsum(group, out=group)
    out = np.zeros((k, starts.size))
    for i in range(k):
        np.add.at(out[i], group, values[:, i])
    return out.T.copy()


class _DenseStore:
    kind = "dense"

    def __init__(self, f: int, k: int):
        self.w = np.zeros((k, 1 << f))
        self.n = 0

    def add_points(self, idx: np.ndarray, contrib_cols: Sequence[np.ndarray], count: str):
        """Scatter-add contributions; ``count`` is "track", "skip" or "recount"."""
        if count == "track":
            touched = np.unique(idx)
            self.n += int(np.count_nonzero(self.w[:, touched].sum(axis=0) == 0))
        for i, col in enumerate(contrib_cols):
            np.add.at(self.w[i], idx, col)
        if count == "recount":
            self.n = int(np.count_nonzero(self.w.sum(axis=0)))

    def add_reduced(self, keys: np.ndarray, weights: np.ndarray):
        self.n += int(np.count_nonzero(self.w[:, keys].sum(axis=0) == 0))
        self.w[:, keys] += weights.T

    def get(self, index: int) -> np.ndarray | None:
        row = self.w[:, index]
        return row if row.any() else None

    def get_many(self, keys: np.ndarray) -> np.ndarray:
        rows = self.w[:, keys].T
        return rows[rows.any(axis=1)]

    def items(self) -> tuple[np.ndarray, np.ndarray]:
        keys = np.flatnonzero(self.w.any(axis=0)).astype(np.uint32)
        return keys, np.ascontiguousarray(self.w[:, keys].T)


class _SparseStore:
    kind = "sparse"

    def __init__(self, f: int, k: int):
        self.keys = np.zeros(0, dtype=np.uint32)
        self.w = np.zeros((0, k))

    @property
    def n(self) -> int:
        return self.keys.size

    def add_reduced(self, keys: np.ndarray, weights: np.ndarray):
        all_keys = np.concatenate([self.keys, keys])
        all_w = np.concatenate([self.w, weights])
        order, ukeys, starts = _group_by_key(all_keys)
        self.keys = ukeys
        self.w = _segment_sums(all_w[order], starts)

    def get(self, index: int) -> np.ndarray | None:
        i = int(self.keys.searchsorted(np.uint32(index)))
        if i < self.keys.size and self.keys[i] == index:
            return self.w[i]
        return None

    def get_many(self, keys: np.ndarray) -> np.ndarray:
        keys = keys.astype(np.uint32, copy=False)
        pos = self.keys.searchsorted(keys)
        pos = np.minimum(pos, max(self.keys.size - 1, 0))
        if self.keys.size == 0:
            return self.w[:0]
        hit = self.keys[pos] == keys
        return self.w[pos[hit]]

    def items(self) -> tuple[np.ndarray, np.ndarray]:
        return self.keys.copy(), self.w.copy()


class SupervisedHashTable:
    """Map from f-bit slot index to accumulated per-class label weights."""

    def __init__(self, config: TrainConfig, n_classes: int, projected_points: int = 0):
        if n_classes < 2:
            raise ContractError(f"need at least 2 classes, got {n_classes}")
        self.config = config
        self.n_classes = n_classes
        self.trained_count = 0
        self.build_seconds = 0.0
        kind = _choose_storage(config, n_classes, projected_points)
        store_cls = _DenseStore if kind == "dense" else _SparseStore
        self._store = store_cls(config.f, n_classes)

    @property
    def f(self) -> int:
        return self.config.f

    @property
    def e(self) -> int:
        return self.config.e

    @property
    def storage(self) -> str:
        return self._store.kind

    @property
    def entry_count(self) -> int:
        return self._store.n

    def __len__(self) -> int:
        return self._store.n

    def __repr__(self) -> str:
        return (
            f"SupervisedHashTable(f={self.f}, e={self.e}, zeta={self.config.zeta}, "
            f"k={self.n_classes}, phi={self.trained_count}, entries={self.entry_count}, "
            f"storage={self.storage})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SupervisedHashTable):
            return NotImplemented
        if (self.config, self.n_classes, self.trained_count) != (
            other.config,
            other.n_classes,
            other.trained_count,
        ):
            return False
        ka, wa = self.entries()
        kb, wb = other.entries()
        return np.array_equal(ka, kb) and np.array_equal(wa, wb)

    __hash__ = None

    def entries(self) -> tuple[np.ndarray, np.ndarray]:
        """Occupied slot indices (ascending) and their raw weights, as copies."""
        return self._store.items()

    def raw_weights(self, index: int) -> np.ndarray | None:
        row = self._store.get(index)
        return None if row is None else row.copy()

    def absorb_arrays(self, codes: np.ndarray, labels: np.ndarray, threads: int = 1):
        """Add training points given as a uint32 code array and a ``(n, k)`` weight matrix.

        ``labels`` rows are used as given; pass normalized distributions to
        match :func:`build`.
        """
        codes, labels = _check_arrays(codes, labels, self.f, self.n_classes)
        n = codes.size
        if n == 0:
            return self
        _check_budget(self.config, self.n_classes, self.trained_count + n, self.storage)
        masks, dists = ball_masks(self.f, self.e)
        zeta_w = self.config.zeta.weights(dists)
        step = max(1, CHUNK_ELEMENTS // masks.size)
        chunks = [(s, min(s + step, n)) for s in range(0, n, step)]

        if self.storage == "dense" and threads <= 1:
            # big batches recount once at the end instead of tracking per chunk
            big = n * masks.size > (1 << self.f) // 8
            for s, t in chunks:
                idx = (codes[s:t, None] ^ masks[None, :]).ravel()
                cols = [np.outer(labels[s:t, i], zeta_w).ravel() for i in range(self.n_classes)]
                count = "track" if not big else ("recount" if t == n else "skip")
                self._store.add_points(idx, cols, count)
        else:

            def reduce_chunk(bounds):
                s, t = bounds
                idx = (codes[s:t, None] ^ masks[None, :]).ravel()
                order, ukeys, starts = _group_by_key(idx)
                point = order // masks.size
                contrib = labels[s:t][point] * zeta_w[order % masks.size, None]
                return ukeys, _segment_sums(contrib, starts)

            if threads > 1 and len(chunks) > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    partials = list(pool.map(reduce_chunk, chunks))
            else:
                partials = [reduce_chunk(c) for c in chunks]
            if len(partials) == 1 or self.storage == "dense":
                for keys, weights in partials:
                    self._store.add_reduced(keys, weights)
            else:
                self._store.add_reduced(
                    np.concatenate([p[0] for p in partials]),
                    np.concatenate([p[1] for p in partials]),
                )
        self.trained_count += n
        bound = min(1 << self.f, self.trained_count * masks.size)
        if self.entry_count > bound:
            raise AssertionError(f"entry count {self.entry_count} exceeds bound {bound}")
        return self

    def query(self, x: Codeword, fallback: Fallback = Fallback()) -> Prediction:
        if x.width != self.f:
            raise ContractError(f"query width {x.width} != table width {self.f}")
        row = self._store.get(x.bits)
        if row is not None:
            return Prediction(normalize(row.tolist()), True)
        for d in range(1, min(fallback.expand, self.f) + 1):
            rows = self._store.get_many(shell_masks(self.f, d) ^ np.uint32(x.bits))
            if rows.shape[0]:
                total = [math.fsum(col) for col in rows.T.tolist()]
                return Prediction(normalize(total), False, d)
        return Prediction(None, False)

    def to_bytes(self) -> bytes:
        keys, weights = self.entries()
        k = self.n_classes
        header = _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            self.f,
            self.e,
            k,
            self.config.zeta.tag,
            self.config.zeta.value,
            self.trained_count,
            keys.size,
        )
        rec = np.zeros(keys.size, dtype=_entry_dtype(k))
        rec["index"] = keys
        rec["w"] = weights
        body = header + rec.tobytes()
        return body + _CRC.pack(zlib.crc32(body))


def _entry_dtype(k: int) -> np.dtype:
    return np.dtype([("index", "<u4"), ("w", "<f8", (k,))])


def _dense_bytes(f: int, k: int) -> int:
    return (1 << f) * k * 8


def _sparse_bytes(f: int, e: int, k: int, points: int) -> int:
    return min(1 << f, points * ball_size(f, e)) * (4 + 8 * k)


def _choose_storage(config: TrainConfig, k: int, points: int) -> str:
    if config.storage == "auto":
        if _dense_bytes(config.f, k) <= config.memory_budget:
            return "dense"
        kind = "sparse"
    else:
        kind = config.storage
    _check_budget(config, k, points, kind)
    return kind


def _check_budget(config: TrainConfig, k: int, points: int, kind: str):
    if kind == "dense":
        need = _dense_bytes(config.f, k)
    else:
        need = _sparse_bytes(config.f, config.e, k, points)
    if need > config.memory_budget:
        raise BudgetError(
            f"{kind} table for f={config.f}, e={config.e}, k={k}, phi={points} "
            f"needs up to {need} bytes; budget is {config.memory_budget}"
        )


def _check_arrays(codes, labels, f: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    codes = np.asarray(codes)
    labels = np.asarray(labels, dtype=np.float64)
    if codes.ndim != 1 or labels.ndim != 2 or labels.shape[0] != codes.size:
        raise ContractError("codes must be 1-D and labels (len(codes), k)")
    if labels.shape[1] != k:
        raise ContractError(f"class count mismatch: {labels.shape[1]} vs {k}")
    if codes.size:
        if codes.min() < 0 or int(codes.max()) >> f:
            raise ContractError(f"codes do not fit in {f} bits")
        if (labels < 0).any() or not (labels.sum(axis=1) > 0).all():
            raise ContractError("label weights must be non-negative with positive mass")
    return codes.astype(np.uint32), labels


def _as_arrays(
    points: Iterable[tuple[Codeword, LabelDistribution]], f: int, n_classes: int | None
) -> tuple[np.ndarray, np.ndarray, int]:
    codes: list[int] = []
    rows: list[tuple[float, ...]] = []
    k = n_classes
    for code, dist in points:
        if code.width != f:
            raise ContractError(f"training codeword width {code.width} != {f}")
        if k is None:
            k = dist.k
        elif dist.k != k:
            raise ContractError(f"class count mismatch: {dist.k} vs {k}")
        codes.append(code.bits)
        rows.append(dist.probs)
    k = 2 if k is None else k
    return np.array(codes, dtype=np.uint32), np.array(rows, dtype=np.float64).reshape(-1, k), k


def build(
    training: Iterable[tuple[Codeword, LabelDistribution]],
    config: TrainConfig,
    n_classes: int | None = None,
    threads: int = 1,
) -> SupervisedHashTable:
    codes, labels, k = _as_arrays(training, config.f, n_classes)
    return build_arrays(codes, labels, config, threads=threads, n_classes=k)


def build_arrays(
    codes: np.ndarray,
    labels: np.ndarray,
    config: TrainConfig,
    threads: int = 1,
    n_classes: int | None = None,
) -> SupervisedHashTable:
    labels = np.asarray(labels, dtype=np.float64)
    k = n_classes if n_classes is not None else labels.shape[1]
    start = time.perf_counter()
    table = SupervisedHashTable(config, k, projected_points=len(codes))
    table.absorb_arrays(codes, labels.reshape(-1, k), threads=threads)
    table.build_seconds = time.perf_counter() - start
    return table


def absorb(table: SupervisedHashTable, point: tuple[Codeword, LabelDistribution]) -> SupervisedHashTable:
    """Add one training point in place and return the table."""
    return absorb_many(table, [point])


def absorb_many(
    table: SupervisedHashTable, points: Iterable[tuple[Codeword, LabelDistribution]]
) -> SupervisedHashTable:
    codes, labels, _ = _as_arrays(points, table.f, table.n_classes)
    return table.absorb_arrays(codes, labels)


def query(table: SupervisedHashTable, x: Codeword, fallback: Fallback = Fallback()) -> Prediction:
    return table.query(x, fallback)


def save(table: SupervisedHashTable) -> bytes:
    return table.to_bytes()


def load(
    data: bytes, storage: str = "auto", memory_budget: int = DEFAULT_MEMORY_BUDGET
) -> SupervisedHashTable:
    data = bytes(data)
    min_len = _HEADER.size + _CRC.size
    if len(data) < 6:
        raise TruncatedError(f"stream of {len(data)} bytes is too short for a model")
    if data[:5] != MAGIC:
        raise ModelLoadError("not an FSLBM model (bad magic)")
    if data[5] != FORMAT_VERSION:
        raise VersionError(f"unsupported model version {data[5]} (expected {FORMAT_VERSION})")
    if len(data) < min_len:
        raise TruncatedError(f"stream of {len(data)} bytes is shorter than the header")
    _, _, f, e, k, tag, zval, trained, n = _HEADER.unpack_from(data)
    if k < 2:
        raise ModelLoadError(f"invalid class count {k} in header")
    expected = _HEADER.size + n * _entry_dtype(k).itemsize + _CRC.size
    (stored_crc,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(data[: len(data) - _CRC.size]) != stored_crc:
        if len(data) < expected:
            raise TruncatedError(f"stream has {len(data)} bytes, header announces {expected}")
        raise ChecksumError("CRC-32 mismatch: model stream is corrupted")
    if len(data) != expected:
        raise ModelLoadError(f"stream has {len(data)} bytes, header announces {expected}")
    try:
        zeta = ZetaPolicy(ZetaPolicy.KINDS[tag], zval)
        config = TrainConfig(f, e, zeta, storage=storage, memory_budget=memory_budget)
    except (IndexError, ContractError) as exc:
        raise ModelLoadError(f"invalid model header: {exc}") from None
    rec = np.frombuffer(data, dtype=_entry_dtype(k), count=n, offset=_HEADER.size)
    keys = rec["index"].astype(np.uint32)
    weights = rec["w"].astype(np.float64).reshape(n, k)
    if n and (np.any(keys[1:] <= keys[:-1]) or int(keys[-1]) >> f):
        raise ModelLoadError("entry indices must be ascending and fit in f bits")
    if n and ((weights < 0).any() or not (weights.sum(axis=1) > 0).all()):
        raise ModelLoadError("entries must carry non-negative weights with positive mass")
    table = SupervisedHashTable(config, k, projected_points=trained)
    if n:
        table._store.add_reduced(keys, weights)
    table.trained_count = trained
    return table
