import math

import numpy as np
import pytest
from scipy import stats as sstats

from distmetric import (
    EmbeddingSet,
    InsufficientSamples,
    SingularCovariance,
    henze_zirkler,
    mardia_kurtosis,
    mardia_skewness,
)
from distmetric.normality import ALL_TESTS, run_test


def _mahalanobis_gram(data):
    """Pairwise Mahalanobis inner products via explicit matrix inverse."""
    centered = data - data.mean(axis=0)
    sinv = np.linalg.inv(centered.T @ centered / len(data))
    return centered @ sinv @ centered.T


def _skew_oracle(data):
    n, d = data.shape
    b1 = float(np.mean(_mahalanobis_gram(data) ** 3))
    stat = n * b1 / 6.0
    df = d * (d + 1) * (d + 2) / 6.0
    return stat, float(sstats.chi2.sf(stat, df))


def _kurt_oracle(data):
    n, d = data.shape
    b2 = float(np.mean(np.diag(_mahalanobis_gram(data)) ** 2))
    stat = (b2 - d * (d + 2)) / math.sqrt(8.0 * d * (d + 2) / n)
    return stat, 2.0 * float(sstats.norm.sf(abs(stat)))


def _hz_statistic_oracle(data):
    n, d = data.shape
    gram = _mahalanobis_gram(data)
    di = np.diag(gram)
    dij = di[:, None] + di[None, :] - 2.0 * gram
    beta = (1.0 / math.sqrt(2.0)) * ((2 * d + 1) * n / 4.0) ** (1.0 / (d + 4.0))
    b2 = beta * beta
    term1 = float(np.mean(np.exp(-b2 / 2.0 * dij)))
    term2 = 2.0 * (1 + b2) ** (-d / 2.0) * float(np.mean(np.exp(-b2 / (2 * (1 + b2)) * di)))
    return n * (term1 - term2 + (1 + 2 * b2) ** (-d / 2.0))


@pytest.fixture
def gaussian_data():
    rng = np.random.default_rng(0)
    return rng.standard_normal((120, 3))


class TestStatisticOracles:
    def test_skewness_matches_inverse_based_oracle(self, gaussian_data):
        report = mardia_skewness(EmbeddingSet.from_rows(gaussian_data))
        stat, p = _skew_oracle(gaussian_data)
        assert report.statistic == pytest.approx(stat, rel=1e-9)
        assert report.p_value == pytest.approx(p, rel=1e-9)

    def test_kurtosis_matches_inverse_based_oracle(self, gaussian_data):
        report = mardia_kurtosis(EmbeddingSet.from_rows(gaussian_data))
        stat, p = _kurt_oracle(gaussian_data)
        assert report.statistic == pytest.approx(stat, rel=1e-9)
        assert report.p_value == pytest.approx(p, rel=1e-9)

    def test_hz_matches_inverse_based_oracle(self, gaussian_data):
        report = henze_zirkler(EmbeddingSet.from_rows(gaussian_data))
        assert report.statistic == pytest.approx(_hz_statistic_oracle(gaussian_data), rel=1e-9)

    def test_hz_lognormal_p_is_upper_tail(self, gaussian_data):
        # recompute the p-value from the reported statistic using the
        # lognormal moments written out longhand
        report = henze_zirkler(EmbeddingSet.from_rows(gaussian_data))
        n, d = gaussian_data.shape
        beta = (1.0 / math.sqrt(2.0)) * ((2 * d + 1) * n / 4.0) ** (1.0 / (d + 4.0))
        b2 = beta * beta
        a = 1 + 2 * b2
        wb = (1 + b2) * (1 + 3 * b2)
        mu = 1 - a ** (-d / 2) * (1 + d * b2 / a + d * (d + 2) * b2**2 / (2 * a**2))
        si2 = (
            2 * (1 + 4 * b2) ** (-d / 2)
            + 2 * a ** (-d) * (1 + 2 * d * b2**2 / a**2 + 3 * d * (d + 2) * b2**4 / (4 * a**4))
            - 4 * wb ** (-d / 2) * (1 + 3 * d * b2**2 / (2 * wb) + d * (d + 2) * b2**4 / (2 * wb**2))
        )
        pmu = math.log(math.sqrt(mu**4 / (si2 + mu**2)))
        psi = math.sqrt(math.log((si2 + mu**2) / mu**2))
        z = (math.log(report.statistic) - pmu) / psi
        assert report.p_value == pytest.approx(float(sstats.norm.sf(z)), rel=1e-12)


class TestInvariances:
    @pytest.mark.parametrize("test_fn", [mardia_skewness, mardia_kurtosis, henze_zirkler])
    def test_affine_invariance(self, gaussian_data, test_fn):
        rng = np.random.default_rng(1)
        transform = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        shifted = gaussian_data @ transform + rng.standard_normal(3)
        base = test_fn(EmbeddingSet.from_rows(gaussian_data))
        moved = test_fn(EmbeddingSet.from_rows(shifted))
        assert moved.statistic == pytest.approx(base.statistic, rel=1e-8)

    def test_log10_p_consistent_with_p(self, gaussian_data):
        report = mardia_skewness(EmbeddingSet.from_rows(gaussian_data))
        assert 10.0**report.log10_p == pytest.approx(report.p_value, rel=1e-10)

    def test_log10_p_usable_when_p_underflows(self):
        rng = np.random.default_rng(2)
        data = rng.exponential(1.0, size=(2000, 4))
        report = mardia_skewness(EmbeddingSet.from_rows(data))
        assert report.p_value == 0.0
        assert report.log10_p < -320.0


class TestErrorsAndDispatch:
    def test_rank_deficient_covariance_rejected(self):
        rng = np.random.default_rng(3)
        col = rng.standard_normal((50, 1))
        data = np.hstack([col, col, rng.standard_normal((50, 1))])
        with pytest.raises(SingularCovariance):
            mardia_skewness(EmbeddingSet.from_rows(data))

    def test_too_few_rows_rejected(self):
        rng = np.random.default_rng(4)
        with pytest.raises(InsufficientSamples):
            henze_zirkler(EmbeddingSet.from_rows(rng.standard_normal((4, 3))))

    def test_dispatch_by_name(self, gaussian_data):
        es = EmbeddingSet.from_rows(gaussian_data)
        for name in ALL_TESTS:
            report = run_test(es, name)
            assert report.test == name
            assert 0.0 <= report.p_value <= 1.0

    def test_dispatch_unknown_name(self, gaussian_data):
        with pytest.raises(ValueError, match="unknown"):
            run_test(EmbeddingSet.from_rows(gaussian_data), "shapiro")


class TestDirectionality:
    def test_skewed_data_rejected_by_skewness(self):
        rng = np.random.default_rng(5)
        data = rng.exponential(1.0, size=(500, 2))
        assert mardia_skewness(EmbeddingSet.from_rows(data)).p_value < 1e-6

    def test_heavy_tails_rejected_by_kurtosis(self):
        rng = np.random.default_rng(6)
        data = rng.standard_t(df=3, size=(500, 2))
        assert mardia_kurtosis(EmbeddingSet.from_rows(data)).p_value < 1e-4

    def test_uniform_rejected_by_hz(self):
        rng = np.random.default_rng(7)
        data = rng.uniform(-1, 1, size=(500, 2))
        assert henze_zirkler(EmbeddingSet.from_rows(data)).p_value < 1e-3
