"""Exception types for the extraction pipeline.

``UsageError`` subclasses mark bad inputs or parameters (CLI exit code
2); ``ExtractionError`` subclasses mark runtime failures (exit code 1).
"""


class ExtractorBaseError(Exception):
    """Base class for all extractor errors."""


class UsageError(ExtractorBaseError):
    """Bad input data, malformed files, or invalid parameters."""


class ExtractionError(ExtractorBaseError):
    """The extraction run could not produce a usable result."""


class UnknownModel(UsageError):
    """Requested model name is not in the registry."""


class EmptyCorpus(UsageError):
    """Input directory contains no WAV files."""


class AudioError(UsageError):
    """A WAV file is unreadable or violates the 16 kHz mono contract."""


class SpeakerParseError(UsageError):
    """A file path does not yield a speaker id under the active rule."""


class LayerSelectionError(UsageError):
    """Requested hidden-state layers do not exist for the model."""


class ModelUnavailable(ExtractionError):
    """Checkpoint could not be loaded locally or from its hub."""


class NoUsableFiles(ExtractionError):
    """Every file in the corpus failed; nothing to write."""
