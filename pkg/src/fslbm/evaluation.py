"""Scoring predictions, the brute-force oracle, and scaling benchmarks."""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from . import synthetic
from .bitcode import Codeword, ContractError, ball_masks
from .labels import LabelDistribution, argmax_label, fuzziness, normalize, total_variation
from .sht import Fallback, Prediction, SupervisedHashTable, TrainConfig, build_arrays


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class EvalReport:
    """Accuracy family over ``n_queries`` test points.

    ``crisp_accuracy``, ``fuzzy_accuracy``, ``fuzziness_mean`` and ``tv_mean``
    are over answered queries only; ``total_accuracy`` counts unanswered
    queries as misses.
    """

    n_queries: int
    n_answered: int
    total_accuracy: float
    crisp_accuracy: float
    fuzzy_accuracy: float
    fuzziness_mean: float
    boolean_error: float
    fuzzy_error: float
    unmatched_rate: float
    tv_mean: float
    build_seconds: float
    mean_query_seconds: float

    def metrics(self) -> dict[str, float]:
        """Every field except the timings."""
        d = asdict(self)
        del d["build_seconds"], d["mean_query_seconds"]
        return d

    def to_text(self) -> str:
        lines = [
            f"queries            {self.n_queries}",
            f"answered           {self.n_answered}",
            f"total accuracy     {self.total_accuracy:.4f}",
            f"crisp accuracy     {self.crisp_accuracy:.4f}",
            f"fuzzy accuracy     {self.fuzzy_accuracy:.4f}",
            f"mean fuzziness     {self.fuzziness_mean:.4f}",
            f"boolean error      {self.boolean_error:.4f}",
            f"fuzzy error        {self.fuzzy_error:.4f}",
            f"unmatched rate     {self.unmatched_rate:.4f}",
            f"mean TV distance   {self.tv_mean:.4f}",
            f"build seconds      {self.build_seconds:.6f}",
            f"mean query seconds {self.mean_query_seconds:.3e}",
        ]
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f.name for f in fields(self)])
        writer.writerow([getattr(self, f.name) for f in fields(self)])
        return buf.getvalue()


def _ratio(num: float, den: int) -> float:
    return num / den if den else 0.0


def evaluate(
    table: SupervisedHashTable,
    test: Sequence[tuple[Codeword, LabelDistribution]],
    fallback: Fallback = Fallback(),
    threads: int = 1,
) -> EvalReport:
    test = list(test)
    if not test:
        raise DegenerateInputError("cannot evaluate on an empty test set")
    for code, truth in test:
        if code.width != table.f:
            raise ContractError(f"test codeword width {code.width} != table width {table.f}")
        if truth.k != table.n_classes:
            raise ContractError(f"test class count {truth.k} != table class count {table.n_classes}")

    codes = [code for code, _ in test]
    start = time.perf_counter()
    if threads > 1:
        step = math.ceil(len(codes) / threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(
                lambda s: [table.query(x, fallback) for x in codes[s : s + step]],
                range(0, len(codes), step),
            )
            preds = [p for part in parts for p in part]
    else:
        preds = [table.query(x, fallback) for x in codes]
    elapsed = time.perf_counter() - start

    m = len(test)
    answered = crisp_hits = fuzzy_hits = 0
    fuzz: list[float] = []
    tvs: list[float] = []
    for (_, truth), pred in zip(test, preds):
        if pred.distribution is None:
            continue
        answered += 1
        want = argmax_label(truth)
        crisp_hits += argmax_label(pred.distribution) == want
        fuzzy_hits += pred.distribution.probs[want] > 0
        fuzz.append(fuzziness(pred.distribution))
        tvs.append(total_variation(pred.distribution, truth))

    crisp_acc = _ratio(crisp_hits, answered)
    fuzzy_acc = _ratio(fuzzy_hits, answered)
    return EvalReport(
        n_queries=m,
        n_answered=answered,
        total_accuracy=crisp_hits / m,
        crisp_accuracy=crisp_acc,
        fuzzy_accuracy=fuzzy_acc,
        fuzziness_mean=_ratio(math.fsum(fuzz), answered),
        boolean_error=1.0 - crisp_acc,
        fuzzy_error=1.0 - fuzzy_acc,
        unmatched_rate=(m - answered) / m,
        tv_mean=_ratio(math.fsum(tvs), answered),
        build_seconds=table.build_seconds,
        mean_query_seconds=elapsed / m,
    )


def oracle_predict(
    training: Sequence[tuple[Codeword, LabelDistribution]], config: TrainConfig, x: Codeword
) -> Prediction:
    """Linear scan over the training set; same semantics as a fallback-free table query."""
    acc: list[float] | None = None
    for code, dist in training:
        if code.width != x.width:
            raise ContractError(f"width mismatch: {code.width} vs {x.width}")
        d = (code.bits ^ x.bits).bit_count()
        if d > config.e:
            continue
        z = config.zeta.weight(d)
        contrib = [z * p for p in dist.probs]
        acc = contrib if acc is None else [a + c for a, c in zip(acc, contrib)]
    if acc is None:
        return Prediction(None, False)
    return Prediction(normalize(acc), True)


@dataclass(frozen=True)
class BenchRow:
    phi: int
    build_seconds: float
    mean_query_seconds: float
    entry_count: int


def bench_scaling(
    f: int,
    e: int,
    phi_schedule: Sequence[int],
    query_count: int,
    seed: int = 0,
    n_classes: int = 2,
    storage: str = "sparse",
    memory_budget: int | None = None,
    repeats: int = 1,
) -> list[BenchRow]:
    """Build and query time per training-set size on seeded uniform data.

    Sparse storage is the default because a dense table pays a fixed
    ``2**f`` allocation that does not depend on ``phi``. Queries are drawn
    from the balls of the first ``min(phi_schedule)`` training points, so
    every query hits an occupied slot at every ``phi``. With ``repeats > 1``
    each timing is the minimum over repeats.
    """
    if not phi_schedule:
        return []
    rng = np.random.default_rng(seed)
    n_max = max(phi_schedule)
    codes = synthetic.random_codes(rng, f, n_max)
    labels = synthetic.one_hot(rng.integers(0, n_classes, size=n_max), n_classes)
    masks, _ = ball_masks(f, e)
    base = codes[rng.integers(0, min(phi_schedule), size=query_count)]
    queries = [Codeword(int(q), f) for q in base ^ masks[rng.integers(0, masks.size, size=query_count)]]

    kwargs = {} if memory_budget is None else {"memory_budget": memory_budget}
    config = TrainConfig(f, e, storage=storage, **kwargs)
    rows = []
    for phi in phi_schedule:
        build_times, query_times = [], []
        for _ in range(max(1, repeats)):
            table = build_arrays(codes[:phi], labels[:phi], config)
            build_times.append(table.build_seconds)
            for x in queries[: min(100, query_count)]:
                table.query(x)
            start = time.perf_counter()
            for x in queries:
                table.query(x)
            query_times.append((time.perf_counter() - start) / max(1, query_count))
        rows.append(BenchRow(phi, min(build_times), min(query_times), table.entry_count))
        del table
    return rows


def fit_doubling_ratio(phis: Sequence[float], seconds: Sequence[float]) -> float:
    """``2 ** slope`` of a least-squares line through ``(log phi, log seconds)``."""
    slope, _ = np.polyfit(np.log(phis), np.log(seconds), 1)
    return float(2.0**slope)


def bench_to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["phi", "build_seconds", "mean_query_seconds", "entry_count"])
    for r in rows:
        writer.writerow([r.phi, f"{r.build_seconds:.6f}", f"{r.mean_query_seconds:.9f}", r.entry_count])
    return buf.getvalue()
