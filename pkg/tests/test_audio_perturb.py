import dataclasses
import json
import math

import numpy as np
import pytest
from scipy.io import wavfile

from distmetric import (
    AudioBuffer,
    DataError,
    EmptyCorpus,
    NoiseSpec,
    RateMismatch,
    SilentNoise,
    SilentSignal,
    measure_power,
    mix_at_snr,
    perturb_corpus,
    read_wav,
    write_wav,
)
from distmetric.audio_perturb import EXTERNAL, GAUSSIAN

RATE = 16000


def _tone(n=8000, amp=0.3, freq=440.0, rate=RATE):
    t = np.arange(n) / rate
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), rate)


class TestAudioBuffer:
    def test_rejects_empty(self):
        with pytest.raises(DataError):
            AudioBuffer(np.array([]), RATE)

    def test_rejects_out_of_range(self):
        with pytest.raises(DataError, match=r"\[-1, 1\]"):
            AudioBuffer(np.array([0.0, 1.5]), RATE)

    def test_rejects_non_finite(self):
        with pytest.raises(DataError):
            AudioBuffer(np.array([0.0, np.nan]), RATE)

    def test_rejects_stereo(self):
        with pytest.raises(DataError, match="mono"):
            AudioBuffer(np.zeros((10, 2)), RATE)

    def test_rejects_bad_rate(self):
        with pytest.raises(DataError):
            AudioBuffer(np.zeros(4), 0)


class TestMeasurePower:
    def test_constant_half(self):
        assert measure_power(AudioBuffer(np.full(100, 0.5), RATE)) == 0.25

    def test_all_zero(self):
        assert measure_power(AudioBuffer(np.zeros(10), RATE)) == 0.0

    def test_full_scale_square_wave(self):
        wave = np.tile([1.0, -1.0], 50)
        assert measure_power(AudioBuffer(wave, RATE)) == 1.0


class TestWavIo:
    def test_float32_roundtrip_is_exact(self, tmp_path):
        buf = _tone()
        write_wav(tmp_path / "a.wav", buf)
        back = read_wav(tmp_path / "a.wav")
        assert back.sample_rate_hz == RATE
        np.testing.assert_array_equal(back.samples, buf.samples.astype(np.float32))

    def test_pcm16_read(self, tmp_path):
        pcm = (np.array([0.0, 0.5, -1.0]) * 32768).astype(np.int16)
        wavfile.write(tmp_path / "p.wav", RATE, pcm)
        back = read_wav(tmp_path / "p.wav")
        np.testing.assert_allclose(back.samples, [0.0, 0.5, -1.0], atol=1 / 32768)

    def test_stereo_rejected(self, tmp_path):
        wavfile.write(tmp_path / "s.wav", RATE, np.zeros((100, 2), dtype=np.int16))
        with pytest.raises(DataError, match="mono"):
            read_wav(tmp_path / "s.wav")

    def test_unsupported_format_rejected(self, tmp_path):
        wavfile.write(tmp_path / "i.wav", RATE, np.zeros(100, dtype=np.int32))
        with pytest.raises(DataError, match="format"):
            read_wav(tmp_path / "i.wav")

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_wav(tmp_path / "nope.wav")


class TestMixAtSnr:
    def test_equal_power_at_zero_db_gives_alpha_one(self, tmp_path):
        write_wav(tmp_path / "noise.wav", _tone(amp=0.25))
        clean = read_wav(tmp_path / "noise.wav")  # identical powers by construction
        spec = NoiseSpec(snr_db=0.0, seed=1, source=EXTERNAL, noise_dir=tmp_path)
        result = mix_at_snr(clean, spec)
        assert result.alpha == pytest.approx(1.0, abs=1e-12)

    def test_equal_power_at_twenty_db_gives_alpha_tenth(self, tmp_path):
        write_wav(tmp_path / "noise.wav", _tone(amp=0.25))
        clean = read_wav(tmp_path / "noise.wav")
        spec = NoiseSpec(snr_db=20.0, seed=1, source=EXTERNAL, noise_dir=tmp_path)
        result = mix_at_snr(clean, spec)
        assert result.alpha == pytest.approx(0.1, abs=1e-12)

    @pytest.mark.parametrize("snr", [0.0, 10.0, 37.5])
    def test_gaussian_achieved_snr_exact(self, snr):
        clean = _tone()
        result = mix_at_snr(clean, NoiseSpec(snr_db=snr, seed=3))
        assert abs(result.achieved_snr_db - snr) < 1e-9

    def test_achieved_snr_from_remeasured_addends(self):
        # re-derive the SNR from the two addends instead of trusting alpha
        clean = _tone(amp=0.2)
        spec = NoiseSpec(snr_db=10.0, seed=5)
        result = mix_at_snr(clean, spec)
        noise_part = np.asarray(result.audio.samples) - clean.samples
        # pre-clip mixture was not clipped here, so subtraction recovers noise
        assert result.clip_fraction == 0.0
        snr = 10 * math.log10(
            measure_power(clean) / float(np.mean(np.square(noise_part)))
        )
        assert snr == pytest.approx(10.0, abs=1e-9)

    def test_clipping_reported_not_renormalized(self):
        clean = AudioBuffer(0.95 * np.ones(4000), RATE)
        result = mix_at_snr(clean, NoiseSpec(snr_db=0.0, seed=2))
        assert result.clip_fraction > 0.0
        assert float(np.abs(result.audio.samples).max()) <= 1.0

    def test_silent_clean_rejected(self):
        with pytest.raises(SilentSignal):
            mix_at_snr(AudioBuffer(np.zeros(100), RATE), NoiseSpec(snr_db=0.0, seed=0))

    def test_silent_noise_rejected(self, tmp_path):
        write_wav(tmp_path / "z.wav", AudioBuffer(np.zeros(100), RATE))
        spec = NoiseSpec(snr_db=0.0, seed=0, source=EXTERNAL, noise_dir=tmp_path)
        with pytest.raises(SilentNoise):
            mix_at_snr(_tone(), spec)

    def test_rate_mismatch_rejected(self, tmp_path):
        write_wav(tmp_path / "n.wav", _tone(rate=8000))
        spec = NoiseSpec(snr_db=0.0, seed=0, source=EXTERNAL, noise_dir=tmp_path)
        with pytest.raises(RateMismatch):
            mix_at_snr(_tone(), spec)

    def test_short_noise_loops(self, tmp_path):
        short = AudioBuffer(np.array([0.5, -0.5] * 10), RATE)
        write_wav(tmp_path / "n.wav", short)
        spec = NoiseSpec(snr_db=0.0, seed=0, source=EXTERNAL, noise_dir=tmp_path)
        result = mix_at_snr(_tone(n=100), spec)
        assert abs(result.achieved_snr_db) < 1e-9

    def test_long_noise_crop_is_seeded(self, tmp_path):
        rng = np.random.default_rng(8)
        long_noise = AudioBuffer(np.clip(0.2 * rng.standard_normal(50000), -1, 1), RATE)
        write_wav(tmp_path / "n.wav", long_noise)
        spec = NoiseSpec(snr_db=5.0, seed=11, source=EXTERNAL, noise_dir=tmp_path)
        a = mix_at_snr(_tone(), spec)
        b = mix_at_snr(_tone(), spec)
        np.testing.assert_array_equal(a.audio.samples, b.audio.samples)
        other = mix_at_snr(_tone(), dataclasses.replace(spec, seed=12))
        assert not np.array_equal(a.audio.samples, other.audio.samples)


class TestPerturbCorpus:
    def _corpus(self, tmp_path, names=("a.wav", "b.wav", "sub/c.wav")):
        rng = np.random.default_rng(0)
        src = tmp_path / "clean"
        for name in names:
            path = src / name
            path.parent.mkdir(parents=True, exist_ok=True)
            samples = np.clip(0.2 * rng.standard_normal(4000), -1, 1)
            write_wav(path, AudioBuffer(samples, RATE))
        return src

    def test_all_files_mixed_at_target(self, tmp_path):
        src = self._corpus(tmp_path)
        report = perturb_corpus(src, tmp_path / "out", NoiseSpec(snr_db=0.0, seed=4))
        assert len(report.files) == 3
        for entry in report.files:
            assert entry.error is None
            assert abs(entry.achieved_snr_db - 0.0) < 1e-9
            assert (tmp_path / "out" / entry.name).exists()

    def test_deterministic_and_order_independent(self, tmp_path):
        src = self._corpus(tmp_path)
        spec = NoiseSpec(snr_db=10.0, seed=4)
        perturb_corpus(src, tmp_path / "o1", spec)
        perturb_corpus(src, tmp_path / "o2", spec)
        for name in ("a.wav", "b.wav", "sub/c.wav"):
            assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()

    def test_per_file_seed_depends_on_name(self, tmp_path):
        src = self._corpus(tmp_path, names=("a.wav",))
        # same content under a different name must draw different noise
        data = read_wav(src / "a.wav")
        write_wav(src / "b.wav", data)
        perturb_corpus(src, tmp_path / "out", NoiseSpec(snr_db=0.0, seed=4))
        a = read_wav(tmp_path / "out" / "a.wav")
        b = read_wav(tmp_path / "out" / "b.wav")
        assert not np.array_equal(a.samples, b.samples)

    def test_empty_dir_rejected(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(EmptyCorpus):
            perturb_corpus(tmp_path / "empty", tmp_path / "out", NoiseSpec(snr_db=0.0, seed=0))

    def test_fail_soft_records_error(self, tmp_path):
        src = self._corpus(tmp_path, names=("a.wav",))
        (src / "broken.wav").write_bytes(b"not a wav file")
        report = perturb_corpus(src, tmp_path / "out", NoiseSpec(snr_db=0.0, seed=0))
        by_name = {e.name: e for e in report.files}
        assert by_name["broken.wav"].error is not None
        assert by_name["a.wav"].error is None

    def test_strict_mode_aborts(self, tmp_path):
        src = self._corpus(tmp_path, names=("a.wav",))
        (src / "broken.wav").write_bytes(b"not a wav file")
        with pytest.raises(DataError):
            perturb_corpus(src, tmp_path / "out", NoiseSpec(snr_db=0.0, seed=0), strict=True)

    def test_report_serializes_to_documented_json(self, tmp_path):
        src = self._corpus(tmp_path, names=("a.wav",))
        report = perturb_corpus(src, tmp_path / "out", NoiseSpec(snr_db=5.0, seed=7))
        doc = json.loads(json.dumps(report.to_dict()))
        assert doc["snr_db"] == 5.0
        assert doc["seed"] == 7
        assert sorted(doc["files"][0]) == ["achieved_snr_db", "clip_fraction", "name"]
