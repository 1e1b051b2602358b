"""Seeded synthetic codeword datasets for benchmarks and acceptance runs."""
from __future__ import annotations

import numpy as np

from .bitcode import ball_masks, popcount


def random_codes(rng: np.random.Generator, f: int, n: int) -> np.ndarray:
    return rng.integers(0, 1 << f, size=n, dtype=np.uint64).astype(np.uint32)


def one_hot(labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((labels.size, k))
    out[np.arange(labels.size), labels] = 1.0
    return out


def flip_within(rng: np.random.Generator, codes: np.ndarray, f: int, max_flips: int) -> np.ndarray:
    """XOR each code with a uniformly drawn mask of weight <= ``max_flips``."""
    masks, _ = ball_masks(f, max_flips)
    return codes ^ masks[rng.integers(0, masks.size, size=codes.size)]


def flip_bernoulli(rng: np.random.Generator, codes: np.ndarray, f: int, p: float) -> np.ndarray:
    bits = rng.random((codes.size, f)) < p
    masks = (bits * (np.uint64(1) << np.arange(f, dtype=np.uint64))).sum(axis=1)
    return codes ^ masks.astype(np.uint32)


def spread_centers(rng: np.random.Generator, f: int, n: int, min_distance: int) -> np.ndarray:
    """``n`` codes with pairwise Hamming distance >= ``min_distance`` (rejection sampling)."""
    centers: list[int] = []
    for _ in range(10_000 * n):
        c = int(random_codes(rng, f, 1)[0])
        if all((c ^ o).bit_count() >= min_distance for o in centers):
            centers.append(c)
            if len(centers) == n:
                return np.array(centers, dtype=np.uint32)
    raise ValueError(f"could not place {n} centers {min_distance} bits apart in {f} bits")


def separable(
    rng: np.random.Generator, f: int, e: int, k: int, n_per_class: int, min_center_distance: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class clusters: each point is its class center with at most ``e`` flipped bits.

    Returns ``(codes, labels, centers)``.
    """
    centers = spread_centers(rng, f, k, min_center_distance)
    labels = np.repeat(np.arange(k), n_per_class)
    codes = flip_within(rng, centers[labels], f, e)
    return codes, labels, centers


def noisy_clusters(
    rng: np.random.Generator,
    f: int,
    k: int,
    prototypes_per_class: int,
    n: int,
    flip_prob: float,
    label_noise: float,
    centers: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bernoulli-perturbed prototypes with a fraction of labels replaced at random.

    Pass the returned ``centers`` back in to draw a test split from the same clusters.
    """
    if centers is None:
        centers = random_codes(rng, f, k * prototypes_per_class)
    proto = rng.integers(0, centers.size, size=n)
    labels = proto % k
    codes = flip_bernoulli(rng, centers[proto], f, flip_prob)
    noisy = rng.random(n) < label_noise
    # resample uniformly among the other classes
    labels = np.where(noisy, (labels + rng.integers(1, k, size=n)) % k, labels)
    return codes, labels, centers


def mixture_at_prototype(
    rng: np.random.Generator, f: int, e: int, n: int, mixture: tuple[float, ...], other_label: int = 0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Two prototypes more than ``2e`` apart.

    Points near the first prototype get crisp labels drawn from ``mixture``;
    points near the second are all ``other_label``. Returns
    ``(codes, labels, prototypes)``.
    """
    protos = spread_centers(rng, f, 2, 2 * e + 1)
    n_mix = n // 2
    labels = np.concatenate(
        [rng.choice(len(mixture), size=n_mix, p=mixture), np.full(n - n_mix, other_label)]
    )
    which = np.concatenate([np.zeros(n_mix, dtype=int), np.ones(n - n_mix, dtype=int)])
    codes = flip_within(rng, protos[which], f, e)
    return codes, labels, protos


def nearest_neighbor_predict(
    train_codes: np.ndarray, train_labels: np.ndarray, queries: np.ndarray, block: int = 512
) -> np.ndarray:
    """Exact brute-force 1-NN in Hamming space; ties go to the lowest training index."""
    train_codes = np.asarray(train_codes, dtype=np.uint32)
    out = np.empty(len(queries), dtype=np.asarray(train_labels).dtype)
    for s in range(0, len(queries), block):
        q = np.asarray(queries[s : s + block], dtype=np.uint32)
        dist = popcount(q[:, None] ^ train_codes[None, :])
        out[s : s + block] = train_labels[dist.argmin(axis=1)]
    return out
