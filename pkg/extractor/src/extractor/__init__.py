"""Utterance-level embedding extraction from pretrained speech encoders.

Walks a corpus of 16 kHz mono WAV files, runs each utterance through a
registered encoder, averages the exposed hidden-state layers, mean-pools
over time, and writes an NPY matrix plus JSON manifest pair.
"""

from .audio import REQUIRED_RATE_HZ, read_wav_16k
from .backends import load_backend, normalize_layers, pool_hidden_states
from .core import (
    DEFAULT_SPEAKER,
    ExtractorConfig,
    ExtractSummary,
    FileResult,
    extract,
    list_corpus,
    speaker_for,
)
from .errors import (
    AudioError,
    EmptyCorpus,
    ExtractionError,
    ExtractorBaseError,
    LayerSelectionError,
    ModelUnavailable,
    NoUsableFiles,
    SpeakerParseError,
    UnknownModel,
    UsageError,
)
from .registry import MODEL_NAMES, REGISTRY, ModelInfo, resolve_model

__version__ = "0.1.0"

__all__ = [
    "AudioError",
    "DEFAULT_SPEAKER",
    "EmptyCorpus",
    "ExtractionError",
    "ExtractorBaseError",
    "ExtractorConfig",
    "ExtractSummary",
    "FileResult",
    "LayerSelectionError",
    "MODEL_NAMES",
    "ModelInfo",
    "ModelUnavailable",
    "NoUsableFiles",
    "REGISTRY",
    "REQUIRED_RATE_HZ",
    "SpeakerParseError",
    "UnknownModel",
    "UsageError",
    "extract",
    "list_corpus",
    "load_backend",
    "normalize_layers",
    "pool_hidden_states",
    "read_wav_16k",
    "resolve_model",
    "speaker_for",
]
