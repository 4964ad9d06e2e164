"""Corpus walking, speaker attribution, and output writing.

extract() turns a directory of 16 kHz mono WAV files into the file pair
downstream tooling consumes: an NPY v1.0 float64 matrix with one row per
utterance (sorted by relative path) and a JSON manifest binding each row
to an utterance id and speaker id.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

import numpy as np

from .audio import REQUIRED_RATE_HZ, read_wav_16k
from .backends import load_backend, normalize_layers
from .errors import (
    AudioError,
    EmptyCorpus,
    LayerSelectionError,
    NoUsableFiles,
    SpeakerParseError,
    UsageError,
)
from .registry import resolve_model

DEFAULT_SPEAKER = "spk0"


@dataclass(frozen=True)
class ExtractorConfig:
    """How to run one extraction pass.

    layers: hidden-state indices to average, None for all exposed states.
    speaker_regex: pattern with one capture group applied to the relative
    POSIX path; overrides the directory-layout rule.
    checkpoint: local path or hub id overriding the registry default.
    """

    model: str
    layers: tuple[int, ...] | None = None
    speaker_regex: str | None = None
    checkpoint: str | None = None
    batch_size: int = 1
    device: str = "cpu"

    def __post_init__(self):
        resolve_model(self.model)
        if self.layers is not None:
            object.__setattr__(self, "layers", tuple(int(k) for k in self.layers))
            if not self.layers:
                raise UsageError("layers must be None or a nonempty tuple")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise UsageError(f"batch_size must be a positive int, got {self.batch_size!r}")
        if self.speaker_regex is not None:
            try:
                pattern = re.compile(self.speaker_regex)
            except re.error as exc:
                raise UsageError(f"invalid speaker regex: {exc}") from exc
            if pattern.groups != 1:
                raise UsageError(
                    f"speaker regex must have exactly one capture group, "
                    f"got {pattern.groups}"
                )


@dataclass(frozen=True)
class FileResult:
    name: str
    error: str | None = None

    def to_dict(self) -> dict:
        d = {"name": self.name}
        if self.error is not None:
            d["error"] = self.error
        return d


@dataclass(frozen=True)
class ExtractSummary:
    model: str
    checkpoint: str
    dim: int
    layers: tuple[int, ...]
    n_files: int
    n_ok: int
    n_failed: int
    out_matrix: str
    out_manifest: str
    files: tuple[FileResult, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "checkpoint": self.checkpoint,
            "dim": self.dim,
            "layers": list(self.layers),
            "n_files": self.n_files,
            "n_ok": self.n_ok,
            "n_failed": self.n_failed,
            "out_matrix": self.out_matrix,
            "out_manifest": self.out_manifest,
            "files": [f.to_dict() for f in self.files],
        }


def list_corpus(corpus_dir: Path | str) -> list[Path]:
    corpus_dir = Path(corpus_dir)
    files = sorted(p for p in corpus_dir.rglob("*.wav") if p.is_file())
    if not files:
        raise EmptyCorpus(f"no WAV files under {corpus_dir}")
    return files


def speaker_for(rel_posix: str, pattern: re.Pattern | None) -> str:
    """Speaker id for one relative path.

    With a pattern, the single capture group decides. Otherwise the first
    directory component is the speaker (the <speaker>/<chapter>/<utt>.wav
    layout); flat files share one placeholder speaker.
    """
    if pattern is not None:
        m = pattern.search(rel_posix)
        if m is None or not m.group(1):
            raise SpeakerParseError(
                f"{rel_posix}: speaker regex produced no capture"
            )
        return m.group(1)
    parts = PurePosixPath(rel_posix).parts
    return parts[0] if len(parts) >= 2 else DEFAULT_SPEAKER


def _write_matrix(matrix: np.ndarray, path: Path) -> None:
    with open(path, "wb") as fh:
        np.save(fh, np.ascontiguousarray(matrix, dtype=np.float64))


def _write_manifest(entries: list[dict], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"entries": entries}, fh, indent=2)
        fh.write("\n")


def extract(
    corpus_dir: Path | str,
    config: ExtractorConfig,
    out_matrix: Path | str,
    out_manifest: Path | str,
) -> ExtractSummary:
    """Embed every readable WAV under corpus_dir and write the file pair.

    Unreadable or non-conforming files are recorded per file and skipped;
    zero successes raise NoUsableFiles and nothing is written.
    """
    info = resolve_model(config.model)
    if info.n_hidden_states == 0 and config.layers is not None:
        # native utterance embedding, no layer axis to select from
        raise LayerSelectionError(
            f"{config.model} emits its native utterance embedding; "
            "layer selection does not apply"
        )
    pattern = re.compile(config.speaker_regex) if config.speaker_regex else None
    files = list_corpus(corpus_dir)
    corpus_dir = Path(corpus_dir)

    results: list[FileResult] = []
    names: list[str] = []
    waves: list[np.ndarray] = []
    speakers: list[str] = []
    for path in files:
        rel = path.relative_to(corpus_dir).as_posix()
        try:
            samples = read_wav_16k(path)
            speakers.append(speaker_for(rel, pattern))
        except (AudioError, SpeakerParseError, OSError) as exc:
            results.append(FileResult(rel, str(exc)))
            continue
        results.append(FileResult(rel))
        names.append(rel)
        waves.append(samples)
    if not waves:
        raise NoUsableFiles(
            f"all {len(files)} files under {corpus_dir} failed; nothing to write"
        )

    backend = load_backend(info, config.checkpoint, config.device)
    if backend.n_hidden_states == 0:
        layer_indices: tuple[int, ...] = ()
    else:
        layer_indices = normalize_layers(config.layers, backend.n_hidden_states)
    rows = [
        backend.embed_batch(waves[i : i + config.batch_size], layer_indices)
        for i in range(0, len(waves), config.batch_size)
    ]
    matrix = np.vstack(rows)
    if not np.all(np.isfinite(matrix)):
        raise NoUsableFiles("model produced non-finite embedding values")

    entries = [
        {
            "utt_id": name.removesuffix(".wav"),
            "speaker_id": spk,
            "duration_s": len(w) / REQUIRED_RATE_HZ,
        }
        for name, spk, w in zip(names, speakers, waves)
    ]
    _write_matrix(matrix, Path(out_matrix))
    _write_manifest(entries, Path(out_manifest))
    return ExtractSummary(
        model=config.model,
        checkpoint=str(config.checkpoint or info.hub_id),
        dim=int(matrix.shape[1]),
        layers=layer_indices,
        n_files=len(files),
        n_ok=len(waves),
        n_failed=len(files) - len(waves),
        out_matrix=str(out_matrix),
        out_manifest=str(out_manifest),
        files=tuple(results),
    )
