"""Scikit-learn style wrappers around the numeric core.

These estimators make the front-end, the compressors and the joint
trainer composable with the wider ecosystem (pipelines, ``clone``,
``get_params`` / ``set_params``). The numeric work lives in
:mod:`speccomp.frontend`, :mod:`speccomp.compression` and
:mod:`speccomp.training`; the classes here only manage parameters and
fitted state.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .compression import CompressorState, check_spectrogram, forward, preset_state
from .frontend import FrameSpec, Waveform, stft_magnitude
from .training import TrainConfig, embed, init_head, train_joint


def _as_waveform(item, sample_rate: int) -> Waveform:
    if isinstance(item, Waveform):
        return item
    return Waveform(np.asarray(item, dtype=np.float64), sample_rate)


class SpectrogramTransformer(BaseEstimator, TransformerMixin):
    """Stateless transformer from waveforms to magnitude spectrograms.

    Parameters
    ----------
    window_len, hop, n_fft : int
        Framing configuration; defaults match a 25 ms window every 10 ms
        at 16 kHz with a 512-point transform.
    sample_rate : int
        Rate assumed for bare sample arrays (Waveform inputs carry their own).
    """

    def __init__(self, window_len=400, hop=160, n_fft=512, sample_rate=16000):
        self.window_len = window_len
        self.hop = hop
        self.n_fft = n_fft
        self.sample_rate = sample_rate

    def _frame_spec(self) -> FrameSpec:
        return FrameSpec(window_len=self.window_len, hop=self.hop, n_fft=self.n_fft)

    def fit(self, X=None, y=None):
        self._frame_spec()  # validate parameters
        return self

    def transform(self, X):
        """A single waveform maps to a (T, F) matrix, a list to a list."""
        spec = self._frame_spec()
        if isinstance(X, Waveform) or (isinstance(X, np.ndarray) and X.ndim == 1):
            return stft_magnitude(_as_waveform(X, self.sample_rate), spec)
        return [stft_magnitude(_as_waveform(item, self.sample_rate), spec) for item in X]


class CompressionTransformer(BaseEstimator, TransformerMixin):
    """Learnable-compression transformer over (frames, channels) magnitudes.

    ``fit`` performs the kernelized initialization for the number of
    channels seen in the data; the parameters can then be trained jointly
    elsewhere (see :class:`SpeakerEmbedder`) or used as-is.

    Parameters
    ----------
    preset : str
        One of ``log``, ``offset-log``, ``cube-root``, ``power-law``, ``drc``.
    mode : str
        ``static``, ``cd`` or ``mr-cd``.
    n_regimes : int
        Regime count for the multi-regime design.
    input_floor : float
        Clamp applied under the log and power operators.
    seed : int
        Seed for the offset-log normal initialization.
    """

    def __init__(self, preset="cube-root", mode="cd", n_regimes=3, input_floor=1e-10, seed=0):
        self.preset = preset
        self.mode = mode
        self.n_regimes = n_regimes
        self.input_floor = input_floor
        self.seed = seed

    @classmethod
    def from_state(cls, state: CompressorState) -> "CompressionTransformer":
        """Wrap an existing state (e.g. loaded from disk) without re-initializing."""
        transformer = cls(mode=state.mode.value, n_regimes=state.n_regimes,
                          input_floor=state.input_floor)
        transformer.state_ = state.copy()
        return transformer

    def fit(self, X, y=None):
        first = X if isinstance(X, np.ndarray) and X.ndim == 2 else X[0]
        n_channels = check_spectrogram(first).shape[1]
        self.state_ = preset_state(
            self.preset,
            self.mode,
            n_channels,
            n_regimes=self.n_regimes,
            input_floor=self.input_floor,
            seed=self.seed,
        )
        return self

    def transform(self, X):
        if not hasattr(self, "state_"):
            raise NotFittedError("CompressionTransformer is not fitted yet")
        if isinstance(X, np.ndarray) and X.ndim == 2:
            return forward(X, self.state_)
        return [forward(item, self.state_) for item in X]


class SpeakerEmbedder(BaseEstimator):
    """Joint front-end + toy classifier, exposed as fit/transform.

    ``fit(X, y)`` takes a list of (frames, channels) magnitude matrices and
    integer speaker labels, trains the compression parameters jointly with
    the classification head, and stores ``state_``, ``head_`` and
    ``report_``. ``transform`` returns utterance embeddings.
    """

    def __init__(
        self,
        preset="cube-root",
        mode="cd",
        n_regimes=3,
        input_floor=1e-10,
        embed_dim=64,
        s=30.0,
        m=0.2,
        learning_rate=1e-3,
        epochs=20,
        batch_size=32,
        seed=0,
    ):
        self.preset = preset
        self.mode = mode
        self.n_regimes = n_regimes
        self.input_floor = input_floor
        self.embed_dim = embed_dim
        self.s = s
        self.m = m
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X, y):
        X = [check_spectrogram(item) for item in X]
        labels = np.asarray(y, dtype=np.int64)
        if labels.shape != (len(X),):
            raise ValueError("y must hold one integer label per utterance")
        n_classes = int(labels.max()) + 1
        n_channels = X[0].shape[1]
        state = preset_state(
            self.preset,
            self.mode,
            n_channels,
            n_regimes=self.n_regimes,
            input_floor=self.input_floor,
            seed=self.seed,
        )
        head = init_head(n_channels, n_classes, self.embed_dim, seed=self.seed)
        config = TrainConfig(
            s=self.s,
            m=self.m,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        self.report_ = train_joint(list(zip(X, labels)), state, head, config)
        self.state_ = self.report_.final_state
        self.head_ = self.report_.final_head
        return self

    def transform(self, X):
        if not hasattr(self, "head_"):
            raise NotFittedError("SpeakerEmbedder is not fitted yet")
        return np.stack([embed(forward(check_spectrogram(x), self.state_), self.head_) for x in X])
