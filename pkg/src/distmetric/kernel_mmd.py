"""Unbiased kernel two-sample discrepancy between embedding sets.

The estimate is the standard U-statistic

    1/(m(m-1)) sum_{i!=j} k(R_i, R_j) + 1/(n(n-1)) sum_{i!=j} k(G_i, G_j)
    - 2/(mn) sum_{i,j} k(R_i, G_j)

with the Gaussian kernel k(r, g) = exp(-||r - g||^2 / (2 sigma^2)). All
double sums run through the blocked streaming reducer, so sets of tens of
thousands of rows never allocate an m x n matrix, and results are
bit-identical across thread counts. The cross term is evaluated in a
content-canonical argument order, which makes swapping the two sets an
exact no-op when m == n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocked import DEFAULT_BLOCK, canonical_pair, pair_sum
from .errors import DegenerateData, DimensionError, DomainError, InsufficientSamples
from .tensor_io import EmbeddingSet

MEDIAN_MAX_PAIRS = 100_000


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian-kernel bandwidth: a fixed sigma, or None for the median
    heuristic resolved from the data (seeded, deterministic)."""

    sigma: float | None = None
    median_max_pairs: int = MEDIAN_MAX_PAIRS
    seed: int = 0

    def __post_init__(self):
        if self.sigma is not None:
            if not math.isfinite(self.sigma) or self.sigma <= 0:
                raise DomainError(f"fixed sigma must be finite and > 0, got {self.sigma}")
        if self.median_max_pairs < 1:
            raise DomainError("median_max_pairs must be >= 1")


@dataclass(frozen=True)
class MmdResult:
    value: float
    sigma_used: float
    m: int
    n: int


def gaussian_kernel(r, g, sigma: float) -> float:
    """k(r, g) = exp(-||r - g||^2 / (2 sigma^2)) for two vectors."""
    r = np.asarray(r, dtype=np.float64).reshape(-1)
    g = np.asarray(g, dtype=np.float64).reshape(-1)
    if r.shape != g.shape:
        raise DimensionError(f"vector dims differ: {r.shape[0]} vs {g.shape[0]}")
    if not (sigma > 0) or not math.isfinite(sigma):
        raise DomainError(f"sigma must be finite and > 0, got {sigma}")
    d = r - g
    return float(np.exp(-(d @ d) / (2.0 * sigma * sigma)))


def _decode_pair_index(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # invert t = i*(i-1)/2 + j with 0 <= j < i; float sqrt can be off by
    # one at large t, so nudge i until the triangular bounds hold
    i = ((1.0 + np.sqrt(1.0 + 8.0 * t.astype(np.float64))) // 2).astype(np.int64)
    i -= t < i * (i - 1) // 2
    i += t >= i * (i + 1) // 2
    j = t - i * (i - 1) // 2
    return i, j


def median_heuristic_sigma(
    ref: EmbeddingSet,
    gen: EmbeddingSet,
    max_pairs: int = MEDIAN_MAX_PAIRS,
    seed: int = 0,
) -> float:
    """sigma = sqrt(median ||x_i - x_j||^2 / 2) over pooled rows.

    At most max_pairs distinct pairs are examined, chosen by a seeded
    draw; the pool is assembled in a content-canonical order so the
    result does not depend on which set is passed first.
    """
    if max_pairs < 1:
        raise DomainError("max_pairs must be >= 1")
    a, b = canonical_pair(ref.data, gen.data)
    pooled = np.vstack([a, b])
    p = pooled.shape[0]
    if p < 2:
        raise InsufficientSamples("need at least 2 pooled rows")
    total = p * (p - 1) // 2
    if total <= max_pairs:
        i, j = np.triu_indices(p, k=1)
        i, j = i.astype(np.int64), j.astype(np.int64)
    else:
        rng = np.random.default_rng(seed)
        t = np.unique(rng.integers(0, total, size=max_pairs, dtype=np.int64))
        i, j = _decode_pair_index(t)
    d2 = np.empty(i.shape[0], dtype=np.float64)
    chunk = 8192
    for k in range(0, i.shape[0], chunk):
        diff = pooled[i[k : k + chunk]] - pooled[j[k : k + chunk]]
        d2[k : k + chunk] = np.einsum("ij,ij->i", diff, diff)
    med = float(np.median(d2))
    if med <= 0.0:
        raise DegenerateData("median pairwise distance is zero; supply a fixed sigma")
    return math.sqrt(med / 2.0)


def resolve_sigma(ref: EmbeddingSet, gen: EmbeddingSet, kernel: KernelSpec) -> float:
    if kernel.sigma is not None:
        return kernel.sigma
    return median_heuristic_sigma(ref, gen, kernel.median_max_pairs, kernel.seed)


def _kernel_transform(sigma: float):
    scale = -1.0 / (2.0 * sigma * sigma)

    def transform(d2: np.ndarray) -> np.ndarray:
        return np.exp(d2 * scale)

    return transform


def self_term(
    x: np.ndarray, sigma: float, block: int = DEFAULT_BLOCK, threads: int = 1
) -> float:
    """1/(m(m-1)) sum_{i!=j} k(x_i, x_j)."""
    m = x.shape[0]
    s = pair_sum(x, x, _kernel_transform(sigma), diag="drop", block=block, threads=threads)
    return s / (m * (m - 1))


def cross_term(
    x: np.ndarray, y: np.ndarray, sigma: float, block: int = DEFAULT_BLOCK, threads: int = 1
) -> float:
    """1/(mn) sum_{i,j} k(x_i, y_j); argument order canonicalized."""
    a, b = canonical_pair(x, y)
    s = pair_sum(a, b, _kernel_transform(sigma), block=block, threads=threads)
    return s / (x.shape[0] * y.shape[0])


def compute_smmd(
    ref: EmbeddingSet,
    gen: EmbeddingSet,
    kernel: KernelSpec = KernelSpec(),
    block: int = DEFAULT_BLOCK,
    threads: int = 1,
) -> MmdResult:
    """Unbiased squared-MMD estimate between two embedding sets.

    May be negative for finite samples from identical distributions; a
    value near zero means the sets are kernel-indistinguishable.
    """
    if ref.n < 2 or gen.n < 2:
        raise InsufficientSamples(f"need m, n >= 2, got m={ref.n}, n={gen.n}")
    if ref.dim != gen.dim:
        raise DimensionError(f"dimension mismatch: ref D={ref.dim}, gen D={gen.dim}")
    sigma = resolve_sigma(ref, gen, kernel)
    value = (
        self_term(ref.data, sigma, block=block, threads=threads)
        + self_term(gen.data, sigma, block=block, threads=threads)
        - 2.0 * cross_term(ref.data, gen.data, sigma, block=block, threads=threads)
    )
    return MmdResult(value=value, sigma_used=sigma, m=ref.n, n=gen.n)
