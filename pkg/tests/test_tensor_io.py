import json
import struct

import numpy as np
import pytest

from distmetric import (
    ConsistencyError,
    DataError,
    EmbeddingSet,
    FormatError,
    Manifest,
    ManifestEntry,
    read_embedding_set,
    write_embedding_set,
)


def _write_pair(tmp_path, data, dtype="float64", speaker_ids=None):
    es = EmbeddingSet.from_rows(data, speaker_ids=speaker_ids)
    matrix, manifest = tmp_path / "m.npy", tmp_path / "m.json"
    write_embedding_set(es, matrix, manifest, dtype=dtype)
    return matrix, manifest


class TestEmbeddingSet:
    def test_basic_properties(self):
        es = EmbeddingSet.from_rows(
            np.arange(12.0).reshape(4, 3), speaker_ids=["a", "a", "b", "b"]
        )
        assert es.n == 4
        assert es.dim == 3
        assert es.n_speakers == 2
        assert es.data.dtype == np.float64
        assert not es.data.flags.writeable

    def test_one_dimensional_rows_promoted_to_column(self):
        es = EmbeddingSet.from_rows(np.array([1.0, 2.0, 3.0]))
        assert es.data.shape == (3, 1)

    def test_non_finite_rejected_with_location(self):
        data = np.ones((3, 2))
        data[1, 1] = np.nan
        with pytest.raises(DataError, match="row 1"):
            EmbeddingSet.from_rows(data)

    def test_manifest_length_mismatch(self):
        manifest = Manifest((ManifestEntry("u0", "s"),))
        with pytest.raises(ConsistencyError):
            EmbeddingSet(np.ones((2, 2)), manifest)

    def test_duplicate_utt_ids_rejected(self):
        with pytest.raises(ConsistencyError):
            Manifest((ManifestEntry("u0", "a"), ManifestEntry("u0", "b")))

    def test_take_slices_rows_and_manifest(self):
        es = EmbeddingSet.from_rows(
            np.arange(10.0).reshape(5, 2), speaker_ids=list("aabbc")
        )
        sub = es.take(np.array([0, 3, 4]))
        assert sub.n == 3
        np.testing.assert_array_equal(sub.data, es.data[[0, 3, 4]])
        assert [e.speaker_id for e in sub.manifest.entries] == ["a", "b", "c"]

    def test_speaker_groups(self):
        es = EmbeddingSet.from_rows(np.ones((4, 1)), speaker_ids=["x", "y", "x", "y"])
        groups = es.manifest.speaker_groups()
        assert groups == {"x": [0, 2], "y": [1, 3]}


class TestRoundTrip:
    @pytest.mark.parametrize("dtype", ["float64", "float32"])
    def test_roundtrip_preserves_data(self, tmp_path, dtype):
        rng = np.random.default_rng(0)
        data = rng.standard_normal((7, 5)).astype(dtype)
        matrix, manifest = _write_pair(tmp_path, data, dtype=dtype)
        es = read_embedding_set(matrix, manifest)
        np.testing.assert_array_equal(es.data, np.asarray(data, dtype=np.float64))

    def test_written_matrix_loads_with_numpy(self, tmp_path):
        rng = np.random.default_rng(1)
        data = rng.standard_normal((6, 4))
        matrix, _ = _write_pair(tmp_path, data)
        np.testing.assert_array_equal(np.load(matrix), data)

    def test_numpy_written_matrix_loads_here(self, tmp_path):
        rng = np.random.default_rng(2)
        data = rng.standard_normal((6, 4)).astype(np.float32)
        np.save(tmp_path / "m.npy", data)
        es = EmbeddingSet.from_rows(np.zeros((6, 4)))
        write_embedding_set(es, tmp_path / "unused.npy", tmp_path / "m.json")
        got = read_embedding_set(tmp_path / "m.npy", tmp_path / "m.json")
        np.testing.assert_array_equal(got.data, data.astype(np.float64))

    def test_payload_is_64_byte_aligned(self, tmp_path):
        matrix, _ = _write_pair(tmp_path, np.zeros((3, 3)))
        raw = matrix.read_bytes()
        (hlen,) = struct.unpack("<H", raw[8:10])
        assert (10 + hlen) % 64 == 0

    def test_manifest_json_schema(self, tmp_path):
        _, manifest = _write_pair(tmp_path, np.zeros((2, 2)), speaker_ids=["a", "b"])
        doc = json.loads(manifest.read_text())
        assert [sorted(e) for e in doc["entries"]] == [["speaker_id", "utt_id"]] * 2


class TestMatrixValidation:
    def _valid_bytes(self, data):
        import io

        buf = io.BytesIO()
        np.save(buf, data)
        return bytearray(buf.getvalue())

    def _write_manifest(self, tmp_path, n):
        path = tmp_path / "m.json"
        entries = [{"utt_id": f"u{i}", "speaker_id": "s"} for i in range(n)]
        path.write_text(json.dumps({"entries": entries}))
        return path

    def test_trailing_bytes_rejected(self, tmp_path):
        raw = self._valid_bytes(np.zeros((2, 2)))
        raw += b"\x00" * 8
        (tmp_path / "m.npy").write_bytes(raw)
        with pytest.raises(FormatError, match="payload"):
            read_embedding_set(tmp_path / "m.npy", self._write_manifest(tmp_path, 2))

    def test_truncated_payload_rejected(self, tmp_path):
        raw = self._valid_bytes(np.zeros((2, 2)))
        (tmp_path / "m.npy").write_bytes(raw[:-4])
        with pytest.raises(FormatError):
            read_embedding_set(tmp_path / "m.npy", self._write_manifest(tmp_path, 2))

    def test_bad_magic_rejected(self, tmp_path):
        raw = self._valid_bytes(np.zeros((2, 2)))
        raw[0] = 0x00
        (tmp_path / "m.npy").write_bytes(raw)
        with pytest.raises(FormatError, match="magic"):
            read_embedding_set(tmp_path / "m.npy", self._write_manifest(tmp_path, 2))

    def test_unsupported_dtype_rejected(self, tmp_path):
        raw = self._valid_bytes(np.zeros((2, 2), dtype=np.int32))
        (tmp_path / "m.npy").write_bytes(raw)
        with pytest.raises(FormatError, match="descr"):
            read_embedding_set(tmp_path / "m.npy", self._write_manifest(tmp_path, 2))

    def test_fortran_order_rejected(self, tmp_path):
        data = np.asfortranarray(np.arange(6.0).reshape(2, 3))
        raw = self._valid_bytes(data)
        (tmp_path / "m.npy").write_bytes(raw)
        with pytest.raises(FormatError, match="fortran"):
            read_embedding_set(tmp_path / "m.npy", self._write_manifest(tmp_path, 2))

    def test_one_dimensional_shape_rejected(self, tmp_path):
        raw = self._valid_bytes(np.zeros(4))
        (tmp_path / "m.npy").write_bytes(raw)
        with pytest.raises(FormatError):
            read_embedding_set(tmp_path / "m.npy", self._write_manifest(tmp_path, 4))

    def test_manifest_unknown_key_rejected(self, tmp_path):
        matrix, _ = _write_pair(tmp_path, np.zeros((1, 1)))
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"entries": [{"utt_id": "u", "speaker_id": "s", "x": 1}]}))
        with pytest.raises(FormatError):
            read_embedding_set(matrix, bad)

    def test_row_count_mismatch_with_manifest(self, tmp_path):
        matrix, _ = _write_pair(tmp_path, np.zeros((3, 2)))
        with pytest.raises(ConsistencyError):
            read_embedding_set(matrix, self._write_manifest(tmp_path, 2))
