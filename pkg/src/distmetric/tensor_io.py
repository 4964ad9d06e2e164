"""Embedding-set file I/O.

The matrix lives in an NPY v1.0 file (2-D, little-endian float32/float64,
C order); the manifest is a JSON sidecar binding each matrix row to an
utterance and speaker. The pair is the interchange boundary between the
metric toolkit and whatever produced the embeddings, so the reader is
strict: it validates the header byte-for-byte and rejects any file whose
payload size disagrees with the declared shape.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConsistencyError, DataError, FormatError

_MAGIC = b"\x93NUMPY"
_SUPPORTED_DESCR = {"<f4": np.float32, "<f8": np.float64}
_HEADER_ALIGN = 64


@dataclass(frozen=True)
class ManifestEntry:
    utt_id: str
    speaker_id: str
    duration_s: float | None = None

    def __post_init__(self):
        if not isinstance(self.utt_id, str) or not self.utt_id:
            raise ConsistencyError("utt_id must be a nonempty string")
        if not isinstance(self.speaker_id, str) or not self.speaker_id:
            raise ConsistencyError("speaker_id must be a nonempty string")
        if self.duration_s is not None:
            if not np.isfinite(self.duration_s) or self.duration_s < 0:
                raise ConsistencyError(
                    f"duration_s must be a nonnegative real, got {self.duration_s!r}"
                )


@dataclass(frozen=True)
class Manifest:
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for e in self.entries:
            if e.utt_id in seen:
                raise ConsistencyError(f"duplicate utt_id {e.utt_id!r} in manifest")
            seen.add(e.utt_id)

    def __len__(self) -> int:
        return len(self.entries)

    def speaker_groups(self) -> dict[str, list[int]]:
        """Row indices per speaker, in first-appearance order within a group."""
        groups: dict[str, list[int]] = {}
        for i, e in enumerate(self.entries):
            groups.setdefault(e.speaker_id, []).append(i)
        return groups


@dataclass(frozen=True)
class EmbeddingSet:
    """N x D embedding matrix plus one manifest entry per row.

    The matrix is stored as read-only float64 regardless of on-disk
    precision; instances are immutable and safe to share across threads.
    """

    data: np.ndarray
    manifest: Manifest = field(repr=False)

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"embedding matrix must be 2-D with N,D >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise DataError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        if len(self.manifest) != arr.shape[0]:
            raise ConsistencyError(
                f"matrix has {arr.shape[0]} rows but manifest has {len(self.manifest)} entries"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def n_speakers(self) -> int:
        return len({e.speaker_id for e in self.manifest.entries})

    @classmethod
    def from_rows(cls, data, speaker_ids=None, utt_ids=None) -> "EmbeddingSet":
        """Build a set from a raw matrix, synthesizing manifest fields as needed."""
        data = np.asarray(data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        n = data.shape[0]
        if speaker_ids is None:
            speaker_ids = ["spk0"] * n
        if utt_ids is None:
            utt_ids = [f"utt{i:06d}" for i in range(n)]
        entries = tuple(
            ManifestEntry(utt_id=u, speaker_id=s) for u, s in zip(utt_ids, speaker_ids)
        )
        return cls(data=data, manifest=Manifest(entries))

    def take(self, indices) -> "EmbeddingSet":
        """New set containing the given rows (manifest rows travel along)."""
        idx = np.asarray(indices, dtype=np.intp)
        entries = tuple(self.manifest.entries[i] for i in idx)
        return EmbeddingSet(data=self.data[idx], manifest=Manifest(entries))


def _read_exact(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated file: expected {n} bytes of {what}, got {len(buf)}")
    return buf


def _parse_npy_header(fh) -> tuple[np.dtype, tuple[int, int]]:
    magic = _read_exact(fh, 6, "magic")
    if magic != _MAGIC:
        raise FormatError(f"bad magic bytes {magic!r}; not an NPY file")
    major, minor = _read_exact(fh, 2, "version")
    if (major, minor) != (1, 0):
        raise FormatError(f"unsupported NPY version {major}.{minor}; only 1.0 is accepted")
    (hlen,) = struct.unpack("<H", _read_exact(fh, 2, "header length"))
    header = _read_exact(fh, hlen, "header")
    try:
        meta = ast.literal_eval(header.decode("latin1").strip())
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"unparseable NPY header: {exc}") from exc
    if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"NPY header must declare descr/fortran_order/shape, got {meta!r}")
    descr = meta["descr"]
    if descr not in _SUPPORTED_DESCR:
        raise FormatError(f"unsupported descr {descr!r}; expected '<f4' or '<f8'")
    if meta["fortran_order"] is not False:
        raise FormatError("fortran_order must be False (row-major)")
    shape = meta["shape"]
    if (
        not isinstance(shape, tuple)
        or len(shape) != 2
        or not all(isinstance(s, int) and s >= 1 for s in shape)
    ):
        raise FormatError(f"shape must be a 2-D tuple with N,D >= 1, got {shape!r}")
    return np.dtype(_SUPPORTED_DESCR[descr]), shape


def _read_matrix(matrix_path: Path) -> np.ndarray:
    with open(matrix_path, "rb") as fh:
        dtype, shape = _parse_npy_header(fh)
        payload = fh.read()
    expected = shape[0] * shape[1] * dtype.itemsize
    if len(payload) != expected:
        raise FormatError(
            f"{matrix_path}: header declares shape {shape} ({expected} payload bytes) "
            f"but file carries {len(payload)}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape)


def _read_manifest(manifest_path: Path) -> Manifest:
    with open(manifest_path, "rb") as fh:
        try:
            doc = json.load(fh)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise FormatError(f"{manifest_path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise FormatError(f"{manifest_path}: manifest must be an object with an 'entries' list")
    entries = []
    for i, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict):
            raise FormatError(f"{manifest_path}: entry {i} is not an object")
        unknown = set(raw) - {"utt_id", "speaker_id", "duration_s"}
        if unknown:
            raise FormatError(f"{manifest_path}: entry {i} has unknown keys {sorted(unknown)}")
        try:
            entries.append(
                ManifestEntry(
                    utt_id=raw.get("utt_id"),
                    speaker_id=raw.get("speaker_id"),
                    duration_s=raw.get("duration_s"),
                )
            )
        except ConsistencyError as exc:
            raise ConsistencyError(f"{manifest_path}: entry {i}: {exc}") from exc
    return Manifest(tuple(entries))


def read_embedding_set(matrix_path, manifest_path) -> EmbeddingSet:
    """Load and cross-validate an embedding matrix and its manifest.

    Values are converted to float64 regardless of on-disk precision.
    Raises FormatError for malformed files, ConsistencyError when matrix
    and manifest disagree, DataError for non-finite payload values.
    """
    matrix = _read_matrix(Path(matrix_path))
    manifest = _read_manifest(Path(manifest_path))
    if matrix.shape[0] != len(manifest):
        raise ConsistencyError(
            f"matrix {matrix_path} has {matrix.shape[0]} rows but manifest "
            f"{manifest_path} has {len(manifest)} entries"
        )
    return EmbeddingSet(data=matrix, manifest=manifest)


def _npy_header_bytes(dtype: np.dtype, shape: tuple[int, int]) -> bytes:
    descr = {np.dtype(np.float32): "<f4", np.dtype(np.float64): "<f8"}[dtype]
    header = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape!r}, }}"
    # pad so the payload begins at a 64-byte-aligned offset
    prefix_len = len(_MAGIC) + 2 + 2
    total = prefix_len + len(header) + 1
    pad = (-total) % _HEADER_ALIGN
    header = header + " " * pad + "\n"
    return _MAGIC + bytes([1, 0]) + struct.pack("<H", len(header)) + header.encode("latin1")


def write_embedding_set(es: EmbeddingSet, matrix_path, manifest_path, dtype="float64") -> None:
    """Write the matrix/manifest pair; float64 round-trips bit-exactly."""
    dt = np.dtype(dtype)
    if dt not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise FormatError(f"storage dtype must be float32 or float64, got {dtype!r}")
    arr = np.ascontiguousarray(es.data, dtype=dt)
    with open(matrix_path, "wb") as fh:
        fh.write(_npy_header_bytes(dt, arr.shape))
        fh.write(arr.tobytes(order="C"))
    doc = {"entries": []}
    for e in es.manifest.entries:
        row = {"utt_id": e.utt_id, "speaker_id": e.speaker_id}
        if e.duration_s is not None:
            row["duration_s"] = e.duration_s
        doc["entries"].append(row)
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
