"""WAV ingestion and STFT magnitude spectrograms.

The front-end is deliberately minimal: 16-bit PCM in, linear magnitude
spectrogram out. No pre-emphasis, no resampling, no normalization beyond
the fixed int16 full-scale division, so downstream compressors see the
raw magnitudes.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np

from .errors import AudioFormatError

INT16_FULL_SCALE = 32768.0


@dataclass(frozen=True)
class Waveform:
    """Mono audio signal together with its sampling rate.

    Parameters
    ----------
    samples : np.ndarray
        1-D float array of amplitudes, nominally in [-1, 1].
    sample_rate : int
        Sampling rate in Hz, strictly positive.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise AudioFormatError(f"waveform must be 1-D, got shape {samples.shape}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise AudioFormatError("waveform contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise AudioFormatError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        """Length of the signal in seconds."""
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrameSpec:
    """STFT framing configuration.

    Defaults correspond to a 25 ms window every 10 ms at 16 kHz with a
    512-point transform (257 one-sided channels).
    """

    window_len: int = 400
    hop: int = 160
    n_fft: int = 512

    def __post_init__(self):
        if self.window_len <= 0 or self.hop <= 0 or self.n_fft <= 0:
            raise ValueError("window_len, hop and n_fft must be positive")
        if not (self.hop <= self.window_len <= self.n_fft):
            raise ValueError(
                f"need hop <= window_len <= n_fft, got "
                f"hop={self.hop}, window_len={self.window_len}, n_fft={self.n_fft}"
            )
        if self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")

    @property
    def n_channels(self) -> int:
        """Number of one-sided frequency channels, n_fft // 2 + 1."""
        return self.n_fft // 2 + 1

    def frame_count(self, n_samples: int) -> int:
        """Number of full analysis frames for a signal of ``n_samples``."""
        if n_samples < self.window_len:
            raise ValueError(
                f"signal of {n_samples} samples is shorter than one "
                f"{self.window_len}-sample window"
            )
        return 1 + (n_samples - self.window_len) // self.hop


def load_wav(path) -> Waveform:
    """Read a 16-bit PCM WAV file into a normalized mono waveform.

    Stereo files are downmixed by averaging the two channels. Samples are
    scaled by 1/32768 so that int16 full scale maps to -1.0. The sample
    rate is reported as-is; no resampling is performed.

    Raises
    ------
    AudioFormatError
        If the file is not PCM, not 16-bit, not mono/stereo, or empty.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sample_width = wf.getsampwidth()
            comp_type = wf.getcomptype()
            sample_rate = wf.getframerate()
            n_frames = wf.getnframes()
            if comp_type != "NONE":
                raise AudioFormatError(f"{path}: non-PCM WAV encoding ({comp_type!r})")
            if sample_width != 2:
                raise AudioFormatError(
                    f"{path}: only 16-bit PCM is supported, got {8 * sample_width}-bit"
                )
            if n_channels not in (1, 2):
                raise AudioFormatError(
                    f"{path}: only mono or stereo supported, got {n_channels} channels"
                )
            if n_frames == 0:
                raise AudioFormatError(f"{path}: zero-length audio")
            raw = wf.readframes(n_frames)
    except wave.Error as exc:
        raise AudioFormatError(f"{path}: not a readable PCM WAV file ({exc})") from exc

    pcm = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if n_channels == 2:
        pcm = pcm.reshape(-1, 2).mean(axis=1)
    return Waveform(pcm / INT16_FULL_SCALE, sample_rate)


def hamming_window(length: int) -> np.ndarray:
    """Symmetric Hamming window, 0.54 - 0.46*cos(2*pi*n/(L-1))."""
    return np.hamming(length)


def stft_magnitude(wave_in: Waveform, spec: FrameSpec = FrameSpec()) -> np.ndarray:
    """Magnitude spectrogram of a waveform.

    Frames are left-aligned (no edge padding): frame t covers samples
    ``[t*hop, t*hop + window_len)``. Each frame is Hamming-windowed,
    zero-padded to ``n_fft`` and transformed; the one-sided magnitude is
    returned as a (T, F) array with ``T = 1 + (len - window_len) // hop``
    and ``F = n_fft // 2 + 1``.

    Raises
    ------
    ValueError
        If the signal is shorter than one window.
    """
    x = wave_in.samples
    n_frames = spec.frame_count(x.size)
    offsets = spec.hop * np.arange(n_frames)[:, None]
    frames = x[offsets + np.arange(spec.window_len)[None, :]]
    frames = frames * hamming_window(spec.window_len)
    return np.abs(np.fft.rfft(frames, n=spec.n_fft, axis=1))
