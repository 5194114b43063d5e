import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speccomp.errors import AudioFormatError
from speccomp.frontend import FrameSpec, Waveform, load_wav, stft_magnitude

from oracles import naive_dft_magnitude


class TestLoadWav:
    def test_int16_half_scale(self, tmp_path, write_wav):
        path = tmp_path / "half.wav"
        write_wav(path, [16384, -16384, 0, 32767])
        wav = load_wav(path)
        assert wav.sample_rate == 16000
        assert wav.samples[0] == pytest.approx(0.5, abs=1 / 32768)
        assert wav.samples[1] == pytest.approx(-0.5, abs=1 / 32768)
        assert wav.samples[2] == 0.0

    def test_all_zero_file(self, tmp_path, write_wav):
        path = tmp_path / "zeros.wav"
        write_wav(path, np.zeros(16000, dtype=np.int16))
        wav = load_wav(path)
        assert wav.samples.shape == (16000,)
        assert np.all(wav.samples == 0.0)

    def test_sample_rate_passthrough_no_resampling(self, tmp_path, write_wav):
        path = tmp_path / "8k.wav"
        write_wav(path, np.arange(800, dtype=np.int16), sample_rate=8000)
        wav = load_wav(path)
        assert wav.sample_rate == 8000
        assert wav.samples.size == 800

    def test_stereo_downmixed_by_channel_average(self, tmp_path, write_wav):
        left = np.array([1000, 2000, -3000], dtype=np.int16)
        right = np.array([3000, -2000, -1000], dtype=np.int16)
        interleaved = np.empty(6, dtype=np.int16)
        interleaved[0::2] = left
        interleaved[1::2] = right
        path = tmp_path / "stereo.wav"
        write_wav(path, interleaved, channels=2)
        wav = load_wav(path)
        np.testing.assert_allclose(wav.samples, (left + right) / 2.0 / 32768.0)

    def test_rejects_zero_length(self, tmp_path, write_wav):
        path = tmp_path / "empty.wav"
        write_wav(path, np.zeros(0, dtype=np.int16))
        with pytest.raises(AudioFormatError, match="zero-length"):
            load_wav(path)

    def test_rejects_8bit(self, tmp_path, write_wav):
        path = tmp_path / "8bit.wav"
        write_wav(path, np.zeros(100, dtype=np.uint8), sample_width=1)
        with pytest.raises(AudioFormatError, match="16-bit"):
            load_wav(path)

    def test_rejects_ieee_float_encoding(self, tmp_path):
        # Hand-rolled RIFF header with format tag 3 (IEEE float, non-PCM).
        path = tmp_path / "float.wav"
        data = np.zeros(4, dtype="<f4").tobytes()
        fmt = struct.pack("<HHIIHH", 3, 1, 16000, 64000, 4, 32)
        payload = b"WAVEfmt " + struct.pack("<I", len(fmt)) + fmt
        payload += b"data" + struct.pack("<I", len(data)) + data
        path.write_bytes(b"RIFF" + struct.pack("<I", len(payload)) + payload)
        with pytest.raises(AudioFormatError):
            load_wav(path)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "garbage.wav"
        path.write_bytes(b"this is not audio")
        with pytest.raises(AudioFormatError):
            load_wav(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_wav(tmp_path / "nope.wav")


class TestFrameSpec:
    def test_defaults(self):
        spec = FrameSpec()
        assert (spec.window_len, spec.hop, spec.n_fft) == (400, 160, 512)
        assert spec.n_channels == 257

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(window_len=400, hop=500, n_fft=512),  # hop > window
            dict(window_len=600, hop=160, n_fft=512),  # window > n_fft
            dict(window_len=400, hop=160, n_fft=500),  # not a power of two
            dict(window_len=0, hop=160, n_fft=512),
        ],
    )
    def test_invalid_specs_rejected(self, kwargs):
        with pytest.raises(ValueError):
            FrameSpec(**kwargs)

    @given(
        n_samples=st.integers(min_value=400, max_value=100000),
        window=st.integers(min_value=8, max_value=400),
        hop=st.sampled_from([1, 7, 80, 160, 400]),
    )
    def test_frame_count_closed_form(self, n_samples, window, hop):
        if hop > window:
            return
        spec = FrameSpec(window_len=window, hop=hop, n_fft=512)
        expected = 1 + (n_samples - window) // hop
        assert spec.frame_count(n_samples) == expected

    def test_frame_count_short_signal(self):
        with pytest.raises(ValueError, match="shorter"):
            FrameSpec().frame_count(399)


class TestStftMagnitude:
    def test_one_second_default_shape(self):
        wav = Waveform(np.random.default_rng(0).uniform(-1, 1, 16000), 16000)
        out = stft_magnitude(wav)
        assert out.shape == (98, 257)

    def test_zero_signal_gives_zero_spectrogram(self):
        out = stft_magnitude(Waveform(np.zeros(1000), 16000))
        assert np.all(out == 0.0)

    def test_nonnegative_and_finite(self):
        rng = np.random.default_rng(1)
        out = stft_magnitude(Waveform(rng.uniform(-1, 1, 5000), 16000))
        assert np.all(out >= 0.0)
        assert np.all(np.isfinite(out))

    def test_1khz_tone_peaks_at_bin_32(self):
        # bin = 1000 / 16000 * 512 = 32
        t = np.arange(16000) / 16000.0
        wav = Waveform(np.sin(2 * np.pi * 1000.0 * t), 16000)
        out = stft_magnitude(wav)
        assert np.all(np.argmax(out, axis=1) == 32)

    def test_linear_in_amplitude(self):
        rng = np.random.default_rng(2)
        samples = rng.uniform(-1, 1, 3000)
        base = stft_magnitude(Waveform(samples, 16000))
        for c in (0.25, 0.5, 2.0):
            scaled = stft_magnitude(Waveform(c * samples, 16000))
            np.testing.assert_allclose(scaled, c * base, rtol=1e-6, atol=1e-12)

    def test_matches_naive_dft_oracle(self):
        rng = np.random.default_rng(3)
        spec = FrameSpec()
        for _ in range(5):
            samples = rng.uniform(-1, 1, spec.window_len)
            out = stft_magnitude(Waveform(samples, 16000), spec)
            assert out.shape == (1, 257)
            reference = naive_dft_magnitude(samples * np.hamming(spec.window_len), spec.n_fft)
            err = np.abs(out[0] - reference) / np.maximum(np.abs(reference), 1e-12)
            # relative where the oracle has scale, absolute at its zeros
            mask = reference > 1e-9
            assert np.all(err[mask] < 1e-9)
            assert np.all(np.abs(out[0][~mask] - reference[~mask]) < 1e-9)

    def test_rejects_short_signal(self):
        with pytest.raises(ValueError):
            stft_magnitude(Waveform(np.zeros(100), 16000))

    def test_frames_left_aligned(self):
        # An impulse at the start must appear only in frame 0.
        samples = np.zeros(1000)
        samples[0] = 1.0
        out = stft_magnitude(Waveform(samples, 16000))
        assert np.any(out[0] > 0)
        assert np.all(out[1:] == 0.0)


class TestWaveform:
    def test_rejects_non_finite(self):
        with pytest.raises(AudioFormatError):
            Waveform(np.array([0.0, np.nan]), 16000)

    def test_rejects_bad_rate(self):
        with pytest.raises(AudioFormatError):
            Waveform(np.zeros(10), 0)

    def test_duration(self):
        assert Waveform(np.zeros(8000), 16000).duration == pytest.approx(0.5)
