"""WAV loading for the extraction pipeline.

Inputs must be 16 kHz mono, PCM16 or IEEE float32. Anything else is an
AudioError so the caller can record it per file and keep going.
"""

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import AudioError

REQUIRED_RATE_HZ = 16_000


def read_wav_16k(path: Path | str) -> np.ndarray:
    """Return float32 samples in [-1, 1] from a 16 kHz mono WAV file."""
    path = Path(path)
    try:
        rate, raw = wavfile.read(path)
    except FileNotFoundError:
        raise
    except ValueError as exc:
        raise AudioError(f"{path}: unreadable WAV file ({exc})") from exc
    if raw.ndim != 1:
        raise AudioError(f"{path}: expected mono audio, got {raw.ndim}-D data")
    if rate != REQUIRED_RATE_HZ:
        raise AudioError(
            f"{path}: expected {REQUIRED_RATE_HZ} Hz, got {rate} Hz (no resampling)"
        )
    if raw.size == 0:
        raise AudioError(f"{path}: file holds zero samples")
    if raw.dtype == np.int16:
        samples = raw.astype(np.float32) / 32768.0
    elif raw.dtype == np.float32:
        samples = raw.copy()
    else:
        raise AudioError(
            f"{path}: unsupported sample format {raw.dtype}; expected PCM16 or float32"
        )
    if not np.all(np.isfinite(samples)):
        raise AudioError(f"{path}: non-finite sample values")
    return samples
