"""Distribution distances between speech-embedding sets.

Computes the Fréchet distance and the unbiased squared maximum mean
discrepancy between two sets of utterance embeddings, plus the
surrounding evaluation protocols: multivariate normality testing,
SNR-exact noise perturbation of audio corpora, subset sweeps, and
correlation against human opinion scores.
"""

__version__ = "0.1.0"

from .analysis import (
    CorrelationResult,
    MosRow,
    MosTable,
    correlate,
    read_metric_csv,
    read_mos_csv,
    relative_change,
)
from .audio_perturb import (
    AudioBuffer,
    MixResult,
    NoiseSpec,
    PerturbReport,
    measure_power,
    mix_at_snr,
    perturb_corpus,
    read_wav,
    write_wav,
)
from .errors import (
    ComputationError,
    ConsistencyError,
    DataError,
    DegenerateBaseline,
    DegenerateData,
    DimensionError,
    DistMetricError,
    DomainError,
    EmptyCorpus,
    FormatError,
    InsufficientData,
    InsufficientSamples,
    MissingCondition,
    NotPSDError,
    RateMismatch,
    SilentNoise,
    SilentSignal,
    SingularCovariance,
    UsageError,
)
from .gaussian_stats import (
    GaussianStats,
    compute_fsd,
    estimate_stats,
    sqrtm_psd,
    trace_sqrt_product,
)
from .kernel_mmd import (
    KernelSpec,
    MmdResult,
    compute_smmd,
    gaussian_kernel,
    median_heuristic_sigma,
)
from .normality import (
    NormalityReport,
    henze_zirkler,
    mardia_kurtosis,
    mardia_skewness,
)
from .sweep import (
    SweepCurve,
    SweepPoint,
    SweepSpec,
    random_subset,
    run_fraction_sweep,
    run_snr_sweep,
    speaker_subset,
)
from .tensor_io import (
    EmbeddingSet,
    Manifest,
    ManifestEntry,
    read_embedding_set,
    write_embedding_set,
)

__all__ = [
    "__version__",
    "AudioBuffer",
    "ComputationError",
    "ConsistencyError",
    "CorrelationResult",
    "DataError",
    "DegenerateBaseline",
    "DegenerateData",
    "DimensionError",
    "DistMetricError",
    "DomainError",
    "EmbeddingSet",
    "EmptyCorpus",
    "FormatError",
    "GaussianStats",
    "InsufficientData",
    "InsufficientSamples",
    "KernelSpec",
    "Manifest",
    "ManifestEntry",
    "MissingCondition",
    "MixResult",
    "MmdResult",
    "MosRow",
    "MosTable",
    "NoiseSpec",
    "NormalityReport",
    "NotPSDError",
    "PerturbReport",
    "RateMismatch",
    "SilentNoise",
    "SilentSignal",
    "SingularCovariance",
    "SweepCurve",
    "SweepPoint",
    "SweepSpec",
    "UsageError",
    "compute_fsd",
    "compute_smmd",
    "correlate",
    "estimate_stats",
    "gaussian_kernel",
    "henze_zirkler",
    "mardia_kurtosis",
    "mardia_skewness",
    "measure_power",
    "median_heuristic_sigma",
    "mix_at_snr",
    "perturb_corpus",
    "random_subset",
    "read_embedding_set",
    "read_metric_csv",
    "read_mos_csv",
    "read_wav",
    "relative_change",
    "run_fraction_sweep",
    "run_snr_sweep",
    "speaker_subset",
    "sqrtm_psd",
    "trace_sqrt_product",
    "write_embedding_set",
    "write_wav",
]
