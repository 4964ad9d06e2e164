"""Exception types shared across the toolkit.

``UsageError`` subclasses mark problems with inputs or files (CLI exit
code 2); everything else derived from :class:`ComputationError` marks a
failure inside a computation (CLI exit code 1).
"""


class DistMetricError(Exception):
    """Base class for all toolkit errors."""


class UsageError(DistMetricError):
    """Bad input data, malformed files, or invalid parameters."""


class ComputationError(DistMetricError):
    """A computation could not produce a valid result."""


# --- input / file errors -------------------------------------------------

class FormatError(UsageError):
    """A file does not conform to its declared on-disk format."""


class ConsistencyError(UsageError):
    """Matrix and manifest disagree, or a manifest violates its invariants."""


class DataError(UsageError):
    """Payload values violate data invariants (non-finite, wrong layout)."""


# --- numerical / statistical errors --------------------------------------

class DimensionError(ComputationError):
    """Operands have incompatible dimensions."""


class DomainError(ComputationError):
    """An argument is outside the mathematical domain of the operation."""


class NotPSDError(ComputationError):
    """A matrix required to be positive semidefinite is not."""


class InsufficientSamples(ComputationError):
    """Too few rows to carry out the estimate."""


class DegenerateData(ComputationError):
    """Data carries no usable variation (e.g. all pairwise distances zero)."""


class SingularCovariance(ComputationError):
    """Sample covariance is rank deficient beyond recovery."""


# --- audio errors ---------------------------------------------------------

class SilentSignal(ComputationError):
    """Clean input has zero power; SNR is undefined."""


class SilentNoise(ComputationError):
    """Selected noise segment has zero power; cannot be scaled."""


class RateMismatch(ComputationError):
    """Sample rates differ and implicit resampling is not performed."""


class EmptyCorpus(UsageError):
    """Input directory contains no usable audio files."""


# --- analysis errors ------------------------------------------------------

class DegenerateBaseline(ComputationError):
    """Baseline metric value is zero; relative change is undefined."""


class MissingCondition(ComputationError):
    """Requested baseline condition is absent from the curve."""


class InsufficientData(ComputationError):
    """Fewer joined data points than the method requires."""
