"""Multivariate normality tests for embedding sets.

Three Mahalanobis-based tests: skewness and kurtosis moment tests, and a
characteristic-function test with a lognormal null approximation. All
three work on covariance-whitened rows, so they are invariant under any
invertible affine map of the data. The O(N^2) double sums stream through
the same blocked reducer as the kernel metrics.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from .blocked import DEFAULT_BLOCK, pair_sum
from .errors import InsufficientSamples, SingularCovariance
from .tensor_io import EmbeddingSet

MARDIA_SKEWNESS = "mardia-skew"
MARDIA_KURTOSIS = "mardia-kurt"
HENZE_ZIRKLER = "hz"
ALL_TESTS = (MARDIA_SKEWNESS, MARDIA_KURTOSIS, HENZE_ZIRKLER)

# eigenvalues below PINV_FLOOR_REL * lmax are dropped (pseudo-inverse);
# below SINGULAR_REL * lmax the covariance is treated as rank deficient
PINV_FLOOR_REL = 1e-12
SINGULAR_REL = 1e-14


@dataclass(frozen=True)
class NormalityReport:
    test: str
    statistic: float
    p_value: float
    log10_p: float
    n: int
    d: int


def _whitened_rows(es: EmbeddingSet) -> np.ndarray:
    """Center rows and multiply by S^(-1/2), S the biased (1/N) covariance.

    Whitened inner products / distances are then exactly the Mahalanobis
    quantities the test statistics are built from.
    """
    n, d = es.n, es.dim
    if n < d + 2:
        raise InsufficientSamples(f"need N >= D + 2, got N={n}, D={d}")
    centered = es.data - es.data.mean(axis=0)
    cov = centered.T @ centered / n
    w, v = np.linalg.eigh(cov)
    lmax = float(w[-1])
    if lmax <= 0 or float(w[0]) <= SINGULAR_REL * lmax:
        raise SingularCovariance(
            f"covariance is rank deficient (min/max eigenvalue ratio "
            f"{float(w[0]) / lmax if lmax > 0 else 0:.3e})"
        )
    floor = PINV_FLOOR_REL * lmax
    keep = w > floor
    if not np.all(keep):
        warnings.warn(
            f"{int((~keep).sum())} covariance eigenvalue(s) below {PINV_FLOOR_REL:.0e} "
            "* lambda_max were dropped (pseudo-inverse); statistics use the ambient "
            "dimension and may be distorted",
            RuntimeWarning,
            stacklevel=3,
        )
    inv_sqrt = np.where(keep, 1.0 / np.sqrt(np.where(keep, w, 1.0)), 0.0)
    return centered @ (v * inv_sqrt) @ v.T


def _log10_from_logp(log_p: float) -> float:
    return log_p / math.log(10.0)


def mardia_skewness(
    es: EmbeddingSet, block: int = DEFAULT_BLOCK, threads: int = 1
) -> NormalityReport:
    """Skewness test: N * b1/6 against chi-square(d(d+1)(d+2)/6).

    b1 is the mean cubed Mahalanobis inner product over all row pairs.
    """
    y = _whitened_rows(es)
    n, d = es.n, es.dim
    b1 = pair_sum(y, y, lambda g: g**3, mode="dot", block=block, threads=threads) / (n * n)
    statistic = n * b1 / 6.0
    df = d * (d + 1) * (d + 2) / 6.0
    p = float(sstats.chi2.sf(statistic, df))
    log10_p = _log10_from_logp(float(sstats.chi2.logsf(statistic, df)))
    return NormalityReport(MARDIA_SKEWNESS, float(statistic), p, log10_p, n, d)


def mardia_kurtosis(
    es: EmbeddingSet, block: int = DEFAULT_BLOCK, threads: int = 1
) -> NormalityReport:
    """Kurtosis test: (b2 - d(d+2)) / sqrt(8d(d+2)/N), two-sided normal."""
    y = _whitened_rows(es)
    n, d = es.n, es.dim
    sq = np.einsum("ij,ij->i", y, y)
    b2 = float(np.mean(sq**2))
    statistic = (b2 - d * (d + 2)) / math.sqrt(8.0 * d * (d + 2) / n)
    p = 2.0 * float(sstats.norm.sf(abs(statistic)))
    log10_p = _log10_from_logp(math.log(2.0) + float(sstats.norm.logsf(abs(statistic))))
    return NormalityReport(MARDIA_KURTOSIS, float(statistic), min(p, 1.0), log10_p, n, d)


def henze_zirkler(
    es: EmbeddingSet, block: int = DEFAULT_BLOCK, threads: int = 1
) -> NormalityReport:
    """Characteristic-function test with the lognormal null approximation."""
    y = _whitened_rows(es)
    n, d = es.n, es.dim
    beta = (1.0 / math.sqrt(2.0)) * ((2.0 * d + 1.0) * n / 4.0) ** (1.0 / (d + 4.0))
    b2 = beta * beta

    scale_ij = -b2 / 2.0
    sum_ij = pair_sum(
        y, y, lambda d2: np.exp(d2 * scale_ij), diag="zero", block=block, threads=threads
    )
    di = np.einsum("ij,ij->i", y, y)
    sum_i = float(np.sum(np.exp(-b2 / (2.0 * (1.0 + b2)) * di)))
    statistic = n * (
        sum_ij / (n * n)
        - 2.0 * (1.0 + b2) ** (-d / 2.0) * sum_i / n
        + (1.0 + 2.0 * b2) ** (-d / 2.0)
    )

    # lognormal moments of the statistic under the null
    a = 1.0 + 2.0 * b2
    wb = (1.0 + b2) * (1.0 + 3.0 * b2)
    mu = 1.0 - a ** (-d / 2.0) * (1.0 + d * b2 / a + d * (d + 2.0) * b2**2 / (2.0 * a * a))
    si2 = (
        2.0 * (1.0 + 4.0 * b2) ** (-d / 2.0)
        + 2.0 * a ** (-d)
        * (1.0 + 2.0 * d * b2**2 / a**2 + 3.0 * d * (d + 2.0) * b2**4 / (4.0 * a**4))
        - 4.0 * wb ** (-d / 2.0)
        * (1.0 + 3.0 * d * b2**2 / (2.0 * wb) + d * (d + 2.0) * b2**4 / (2.0 * wb**2))
    )
    pmu = math.log(math.sqrt(mu**4 / (si2 + mu * mu)))
    psi = math.sqrt(math.log((si2 + mu * mu) / (mu * mu)))
    if statistic <= 0.0:
        p, log10_p = 1.0, 0.0
    else:
        z = (math.log(statistic) - pmu) / psi
        p = float(sstats.norm.sf(z))
        log10_p = _log10_from_logp(float(sstats.norm.logsf(z)))
    return NormalityReport(HENZE_ZIRKLER, float(statistic), p, log10_p, n, d)


_DISPATCH = {
    MARDIA_SKEWNESS: mardia_skewness,
    MARDIA_KURTOSIS: mardia_kurtosis,
    HENZE_ZIRKLER: henze_zirkler,
}


def run_test(es: EmbeddingSet, test: str, block: int = DEFAULT_BLOCK, threads: int = 1):
    try:
        fn = _DISPATCH[test]
    except KeyError:
        raise ValueError(f"unknown normality test {test!r}; choose from {ALL_TESTS}") from None
    return fn(es, block=block, threads=threads)
