"""Streaming blocked reductions over all row pairs of two matrices.

Used by the kernel-MMD and normality modules for their O(N^2) double
sums. No N x N matrix is ever materialized: pairs are visited in fixed
row-major blocks, each block is reduced with numpy's pairwise summation,
and the per-block partial sums are combined exactly with math.fsum. The
result is therefore bit-identical for a fixed input no matter how many
worker threads are used or in which order blocks complete.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

DEFAULT_BLOCK = 1024


def canonical_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Order two matrices by a content key so callers can be argument-order
    invariant: swapping the inputs of a symmetric pairwise reduction then
    yields the exact same float, not merely an equal-up-to-rounding one."""
    if a is b:
        return a, b
    ka = (a.shape, hashlib.sha256(np.ascontiguousarray(a).data).hexdigest())
    kb = (b.shape, hashlib.sha256(np.ascontiguousarray(b).data).hexdigest())
    return (a, b) if ka <= kb else (b, a)


def pair_sum(
    x: np.ndarray,
    y: np.ndarray,
    transform: Callable[[np.ndarray], np.ndarray],
    mode: str = "sqdist",
    diag: str = "keep",
    block: int = DEFAULT_BLOCK,
    threads: int = 1,
) -> float:
    """Sum transform(base) over all row pairs (i, j) of x and y.

    base[i, j] is the squared Euclidean distance between x[i] and y[j]
    (mode="sqdist", clamped at 0) or their inner product (mode="dot").

    diag controls the i == j entries when x and y are the same array:
    "keep" uses them as computed, "zero" forces base[i, i] = 0 before the
    transform (exact self-distance), "drop" removes the transformed
    values from the sum.
    """
    if mode not in ("sqdist", "dot"):
        raise ValueError(f"unknown mode {mode!r}")
    if diag not in ("keep", "zero", "drop"):
        raise ValueError(f"unknown diag {diag!r}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = x if y is x else np.ascontiguousarray(y, dtype=np.float64)
    same = x is y
    if diag != "keep" and not same:
        raise ValueError("diag handling requires x and y to be the same array")
    if mode == "sqdist":
        xs = np.einsum("ij,ij->i", x, x)
        ys = xs if same else np.einsum("ij,ij->i", y, y)

    jobs = [
        (i0, j0)
        for i0 in range(0, x.shape[0], block)
        for j0 in range(0, y.shape[0], block)
    ]

    def one_block(job: tuple[int, int]) -> float:
        i0, j0 = job
        xb = x[i0 : i0 + block]
        yb = y[j0 : j0 + block]
        base = xb @ yb.T
        if mode == "sqdist":
            base *= -2.0
            base += xs[i0 : i0 + block, None]
            base += ys[None, j0 : j0 + block]
            np.maximum(base, 0.0, out=base)
        if same and diag == "zero" and i0 == j0:
            np.fill_diagonal(base, 0.0)
        vals = transform(base)
        if same and diag == "drop" and i0 == j0:
            np.fill_diagonal(vals, 0.0)
        return float(vals.sum())

    if threads <= 1 or len(jobs) == 1:
        partials = [one_block(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(one_block, jobs))
    return math.fsum(partials)
