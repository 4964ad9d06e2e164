"""Noise mixing at exact target SNRs over WAV corpora.

SNR is defined over full-utterance mean power. The noise segment is
scaled so that the pre-clip achieved SNR matches the target to within
float rounding, then the mixture is hard-clipped to [-1, 1] and the clip
fraction reported rather than renormalizing the clean signal's level.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import (
    DataError,
    EmptyCorpus,
    RateMismatch,
    SilentNoise,
    SilentSignal,
    UsageError,
)

GAUSSIAN = "gaussian"
EXTERNAL = "external"


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio, normalized samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DataError(f"expected mono audio, got shape {samples.shape}")
        if samples.size < 1:
            raise DataError("audio buffer is empty")
        if not np.all(np.isfinite(samples)):
            raise DataError("audio contains non-finite samples")
        if float(np.abs(samples).max()) > 1.0:
            raise DataError("audio samples outside [-1, 1]")
        samples = np.ascontiguousarray(samples)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if not isinstance(self.sample_rate_hz, int) or self.sample_rate_hz <= 0:
            raise DataError(f"invalid sample rate {self.sample_rate_hz!r}")

    def __len__(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise source plus target SNR. noise_dir is required for EXTERNAL."""

    snr_db: float
    seed: int = 0
    source: str = GAUSSIAN
    noise_dir: Path | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.snr_db):
            raise UsageError(f"snr_db must be finite, got {self.snr_db!r}")
        if self.source not in (GAUSSIAN, EXTERNAL):
            raise UsageError(f"unknown noise source {self.source!r}")
        if self.source == EXTERNAL:
            if self.noise_dir is None:
                raise UsageError("external noise source requires noise_dir")
            object.__setattr__(self, "noise_dir", Path(self.noise_dir))
        elif self.noise_dir is not None:
            raise UsageError("noise_dir is only valid with the external source")


@dataclass(frozen=True)
class MixResult:
    audio: AudioBuffer
    achieved_snr_db: float
    clip_fraction: float
    alpha: float


@dataclass(frozen=True)
class FileReport:
    name: str
    achieved_snr_db: float | None
    clip_fraction: float | None
    error: str | None = None

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "achieved_snr_db": self.achieved_snr_db,
            "clip_fraction": self.clip_fraction,
        }
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass(frozen=True)
class PerturbReport:
    snr_db: float
    seed: int
    files: tuple[FileReport, ...]

    def to_dict(self) -> dict:
        return {
            "snr_db": self.snr_db,
            "seed": self.seed,
            "files": [f.to_dict() for f in self.files],
        }


def read_wav(path: Path | str) -> AudioBuffer:
    """Read a mono PCM16 or IEEE float32 WAV file."""
    path = Path(path)
    try:
        rate, raw = wavfile.read(path)
    except FileNotFoundError:
        raise
    except ValueError as exc:
        raise DataError(f"{path}: unreadable WAV file ({exc})") from exc
    if raw.ndim != 1:
        raise DataError(f"{path}: expected mono audio, got {raw.ndim} channels")
    if raw.dtype == np.int16:
        samples = raw.astype(np.float64) / 32768.0
    elif raw.dtype == np.float32:
        samples = raw.astype(np.float64)
    else:
        raise DataError(
            f"{path}: unsupported sample format {raw.dtype}; "
            "expected PCM16 or float32"
        )
    try:
        return AudioBuffer(samples, int(rate))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_wav(path: Path | str, audio: AudioBuffer) -> None:
    """Write as IEEE float32 WAV (no re-quantization noise)."""
    wavfile.write(Path(path), audio.sample_rate_hz, audio.samples.astype(np.float32))


def measure_power(audio: AudioBuffer) -> float:
    """Mean squared sample value over the whole buffer."""
    return float(np.mean(np.square(audio.samples)))


def _file_seed(seed: int, name: str) -> int:
    """Stable per-file sub-seed; corpus listing order does not matter."""
    digest = hashlib.sha256(f"{seed}|{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _list_wavs(directory: Path) -> list[Path]:
    return sorted(p for p in directory.rglob("*.wav") if p.is_file())


def _noise_segment(clean: AudioBuffer, spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    n = len(clean)
    if spec.source == GAUSSIAN:
        return rng.standard_normal(n)
    files = _list_wavs(spec.noise_dir)
    if not files:
        raise EmptyCorpus(f"no WAV files under {spec.noise_dir}")
    noise = read_wav(files[int(rng.integers(len(files)))])
    if noise.sample_rate_hz != clean.sample_rate_hz:
        raise RateMismatch(
            f"noise rate {noise.sample_rate_hz} Hz != clean rate "
            f"{clean.sample_rate_hz} Hz (no implicit resampling)"
        )
    if len(noise) >= n:
        start = int(rng.integers(len(noise) - n + 1))
        return np.array(noise.samples[start : start + n])
    return np.resize(noise.samples, n)  # seamless loop


def mix_at_snr(clean: AudioBuffer, spec: NoiseSpec) -> MixResult:
    """Add noise scaled so the pre-clip SNR equals spec.snr_db exactly.

    alpha = sqrt(P_clean / (P_noise * 10^(snr/10))), then the mixture is
    hard-clipped to [-1, 1].
    """
    p_clean = measure_power(clean)
    if p_clean <= 0.0:
        raise SilentSignal("clean input has zero power")
    rng = np.random.default_rng(spec.seed)
    noise = _noise_segment(clean, spec, rng)
    p_noise = float(np.mean(np.square(noise)))
    if p_noise <= 0.0:
        raise SilentNoise("noise segment has zero power")
    alpha = math.sqrt(p_clean / (p_noise * 10.0 ** (spec.snr_db / 10.0)))
    scaled = alpha * noise
    mixed = clean.samples + scaled
    achieved = 10.0 * math.log10(p_clean / float(np.mean(np.square(scaled))))
    clip_fraction = float(np.mean(np.abs(mixed) > 1.0))
    clipped = np.clip(mixed, -1.0, 1.0)
    return MixResult(
        audio=AudioBuffer(clipped, clean.sample_rate_hz),
        achieved_snr_db=achieved,
        clip_fraction=clip_fraction,
        alpha=alpha,
    )


def perturb_corpus(
    in_dir: Path | str,
    out_dir: Path | str,
    spec: NoiseSpec,
    strict: bool = False,
) -> PerturbReport:
    """Mix every WAV under in_dir at spec.snr_db into out_dir.

    Relative paths are preserved. Each file gets a sub-seed derived from
    (spec.seed, relative name), so results do not depend on listing
    order. Per-file failures are recorded in the report instead of
    aborting, unless strict.
    """
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    files = _list_wavs(in_dir)
    if not files:
        raise EmptyCorpus(f"no WAV files under {in_dir}")
    reports = []
    for path in files:
        name = path.relative_to(in_dir).as_posix()
        file_spec = dataclasses.replace(spec, seed=_file_seed(spec.seed, name))
        try:
            result = mix_at_snr(read_wav(path), file_spec)
        except (DataError, SilentSignal, SilentNoise, RateMismatch, OSError) as exc:
            if strict:
                raise
            reports.append(FileReport(name, None, None, error=str(exc)))
            continue
        target = out_dir / path.relative_to(in_dir)
        target.parent.mkdir(parents=True, exist_ok=True)
        write_wav(target, result.audio)
        reports.append(FileReport(name, result.achieved_snr_db, result.clip_fraction))
    return PerturbReport(spec.snr_db, spec.seed, tuple(reports))
