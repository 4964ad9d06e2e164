"""Gaussian moment estimation and the Frechet distance between two fits.

The distance between Gaussian fits N(mu_r, cov_r) and N(mu_g, cov_g) is
the Wasserstein-2 closed form

    ||mu_r - mu_g||^2 + tr(cov_r + cov_g - 2 sqrt(cov_r cov_g)),

with the matrix square root evaluated through the symmetric product
sqrt(sqrt(a) b sqrt(a)) so that every eigendecomposition happens on a
symmetric PSD matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, InsufficientSamples, NotPSDError
from .tensor_io import EmbeddingSet

logger = logging.getLogger(__name__)

# covariance estimates from finite samples routinely carry ~ -1e-13 * lmax
# eigenvalue noise; anything below this is treated as genuinely indefinite
EIG_CLAMP_REL = 1e-8


@dataclass(frozen=True)
class GaussianStats:
    """Mean vector, symmetrized covariance, and sample count of one set."""

    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise DimensionError(f"covariance must be square, got shape {cov.shape}")
        if cov.shape[0] != mean.shape[0]:
            raise DimensionError(
                f"mean has dim {mean.shape[0]} but covariance is {cov.shape[0]}x{cov.shape[1]}"
            )
        if self.count < 2:
            raise InsufficientSamples(f"count must be >= 2, got {self.count}")
        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def estimate_stats(es: EmbeddingSet) -> GaussianStats:
    """Column means and unbiased (N-1) sample covariance of an embedding set."""
    if es.n < 2:
        raise InsufficientSamples(f"need at least 2 rows to estimate covariance, got {es.n}")
    mean = es.data.mean(axis=0)
    centered = es.data - mean
    cov = centered.T @ centered / (es.n - 1)
    return GaussianStats(mean=mean, cov=cov, count=es.n)


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if float(np.abs(m - m.T).max(initial=0.0)) > 1e-8 * scale:
        raise DomainError("matrix is not symmetric within tolerance")
    return 0.5 * (m + m.T)


def _clamped_eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with tiny negative eigenvalues clamped to zero."""
    w, v = np.linalg.eigh(m)
    lmax = max(float(w[-1]), 0.0)
    if float(w[0]) < -EIG_CLAMP_REL * lmax:
        raise NotPSDError(
            f"eigenvalue {w[0]:.3e} below -{EIG_CLAMP_REL:.0e} * lambda_max ({lmax:.3e})"
        )
    return np.maximum(w, 0.0), v


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root: S with S @ S == m up to rounding."""
    m = _check_symmetric(m)
    w, v = _clamped_eigh(m)
    root = (v * np.sqrt(w)) @ v.T
    return 0.5 * (root + root.T)


def trace_sqrt_product(a: np.ndarray, b: np.ndarray) -> float:
    """tr(sqrt(a b)) for symmetric PSD a, b via tr(sqrt(sqrt(a) b sqrt(a)))."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"covariance shapes differ: {a.shape} vs {b.shape}")
    sa = sqrtm_psd(a)
    inner = sa @ _check_symmetric(b) @ sa
    w, _ = _clamped_eigh(0.5 * (inner + inner.T))
    return float(np.sum(np.sqrt(w)))


def compute_fsd(ref: GaussianStats, gen: GaussianStats) -> float:
    """Frechet distance between two Gaussian fits (clamped at 0)."""
    if ref.dim != gen.dim:
        raise DimensionError(f"dimension mismatch: ref D={ref.dim}, gen D={gen.dim}")
    delta = ref.mean - gen.mean
    value = (
        float(delta @ delta)
        + float(np.trace(ref.cov))
        + float(np.trace(gen.cov))
        - 2.0 * trace_sqrt_product(ref.cov, gen.cov)
    )
    if value < 0.0:
        logger.debug("clamping small negative distance %.3e to 0", value)
        return 0.0
    return value
