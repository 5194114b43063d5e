"""Joint optimization of compression parameters with a toy classifier.

The classifier head is intentionally small: statistics pooling (per-channel
mean and standard deviation over frames) followed by a single linear
projection, trained with an additive angular margin softmax. Gradients
flow through the head into the compressor parameters via the closed-form
sensitivities from :mod:`speccomp.compression`, and everything is updated
with a deterministic, single-threaded Adam loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .compression import CompressorState, accumulate_param_grads, forward, gradients
from .errors import DivergenceError
from .frontend import FrameSpec, Waveform, stft_magnitude


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the joint training loop."""

    s: float = 30.0
    m: float = 0.2
    learning_rate: float = 1e-3
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError(f"scale s must be positive, got {self.s}")
        if not (0.0 <= self.m < math.pi / 2):
            raise ValueError(f"margin m must lie in [0, pi/2), got {self.m}")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")


@dataclass
class EmbeddingHead:
    """Statistics-pooling head: linear projection plus unit-norm class weights."""

    projection: np.ndarray  # (2F, D)
    class_weights: np.ndarray  # (D, C), unit-norm columns

    def copy(self) -> "EmbeddingHead":
        return EmbeddingHead(self.projection.copy(), self.class_weights.copy())

    @property
    def embed_dim(self) -> int:
        return self.projection.shape[1]

    @property
    def n_classes(self) -> int:
        return self.class_weights.shape[1]


def init_head(n_channels: int, n_classes: int, embed_dim: int = 64, seed: int = 0) -> EmbeddingHead:
    """Random head: scaled-normal projection, normalized class weight columns."""
    rng = np.random.default_rng(seed)
    stats_dim = 2 * n_channels
    projection = rng.standard_normal((stats_dim, embed_dim)) / np.sqrt(stats_dim)
    class_weights = rng.standard_normal((embed_dim, n_classes))
    class_weights /= np.linalg.norm(class_weights, axis=0, keepdims=True)
    return EmbeddingHead(projection=projection, class_weights=class_weights)


# ---------------------------------------------------------------------------
# Synthetic corpus.
# ---------------------------------------------------------------------------


@dataclass
class SyntheticCorpus:
    """Labeled utterances; entries are (spectrogram | Waveform, speaker_id)."""

    utterances: list
    n_speakers: int
    seed: int


def _smooth_log_envelope(rng: np.random.Generator, n_channels: int) -> np.ndarray:
    # Low-pass filtered noise, standardized, so speakers differ by a smooth
    # per-channel coloration that is linearly separable in the log domain.
    raw = rng.standard_normal(n_channels + 32)
    kernel = np.hanning(33)
    kernel /= kernel.sum()
    smooth = np.convolve(raw, kernel, mode="valid")[:n_channels]
    smooth = smooth - smooth.mean()
    scale = smooth.std()
    if scale > 0:
        smooth = smooth / scale
    return smooth


def gen_synthetic_corpus(
    n_speakers: int,
    utts_per_speaker: int,
    duration_s: float = 2.0,
    seed: int = 0,
    *,
    n_channels: int = 257,
    domain: str = "spectrogram",
    frame_spec: FrameSpec = FrameSpec(),
    sample_rate: int = 16000,
    noise_floor: float = 1e-6,
    envelope_scale: float = 1.0,
) -> SyntheticCorpus:
    """Deterministic toy corpus of speaker-colored random utterances.

    Each speaker is a fixed random spectral envelope; an utterance is that
    envelope multiplied by random excitation magnitudes plus an additive
    noise floor. ``envelope_scale`` shrinks the log-envelope spread, which
    makes speakers harder to tell apart. With ``domain="waveform"`` the
    envelope instead filters white noise and utterances are returned as
    waveforms for end-to-end integration through the STFT front-end.
    """
    if n_speakers < 1 or duration_s <= 0:
        raise ValueError("corpus sizes and duration must be positive")
    if utts_per_speaker < 2:
        raise ValueError("every speaker needs at least 2 utterances")
    if domain not in ("spectrogram", "waveform"):
        raise ValueError(f"unknown corpus domain {domain!r}")
    rng = np.random.default_rng(seed)
    utterances = []
    frames_per_second = sample_rate / frame_spec.hop
    n_frames = max(2, int(round(duration_s * frames_per_second)))
    n_samples = int(round(duration_s * sample_rate))
    for speaker in range(n_speakers):
        log_env = envelope_scale * _smooth_log_envelope(rng, n_channels)
        envelope = np.exp(log_env)
        for _ in range(utts_per_speaker):
            if domain == "spectrogram":
                excitation = np.hypot(
                    rng.standard_normal((n_frames, n_channels)),
                    rng.standard_normal((n_frames, n_channels)),
                ) / np.sqrt(2.0)
                values = envelope[None, :] * excitation + noise_floor
                utterances.append((values, speaker))
            else:
                white = rng.standard_normal(n_samples)
                spectrum = np.fft.rfft(white)
                bins = np.linspace(0.0, 1.0, spectrum.size)
                gain = np.interp(bins, np.linspace(0.0, 1.0, n_channels), envelope)
                colored = np.fft.irfft(spectrum * gain, n=n_samples)
                peak = np.max(np.abs(colored))
                if peak > 0:
                    colored = 0.5 * colored / peak
                utterances.append((Waveform(colored, sample_rate), speaker))
    return SyntheticCorpus(utterances=utterances, n_speakers=n_speakers, seed=seed)


def corpus_spectrograms(corpus, frame_spec: FrameSpec = FrameSpec()):
    """Materialize (spectrogram, label) pairs, running the STFT where needed."""
    utterances = corpus.utterances if isinstance(corpus, SyntheticCorpus) else list(corpus)
    out = []
    for item, label in utterances:
        if isinstance(item, Waveform):
            item = stft_magnitude(item, frame_spec)
        out.append((np.asarray(item, dtype=np.float64), int(label)))
    return out


# ---------------------------------------------------------------------------
# Statistics pooling and embedding.
# ---------------------------------------------------------------------------


def utterance_stats(y: np.ndarray) -> np.ndarray:
    """Concatenated per-channel mean and (population) std over frames."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] < 2:
        raise ValueError("statistics pooling needs a 2-D input with at least 2 frames")
    return np.concatenate([y.mean(axis=0), y.std(axis=0)])


def embed(y: np.ndarray, head: EmbeddingHead) -> np.ndarray:
    """Project pooled statistics to a fixed-length embedding."""
    return utterance_stats(y) @ head.projection


def embed_backward(
    d_embedding: np.ndarray, y: np.ndarray, head: EmbeddingHead
) -> tuple[np.ndarray, np.ndarray]:
    """Chain an embedding gradient back onto the input and the projection.

    Returns ``(d_y, d_projection)``. Channels with zero temporal variance
    get a zero std-gradient (the subgradient at the kink).
    """
    y = np.asarray(y, dtype=np.float64)
    n_frames, n_channels = y.shape
    mean = y.mean(axis=0)
    std = y.std(axis=0)
    stats = np.concatenate([mean, std])
    d_stats = head.projection @ d_embedding
    d_mean = d_stats[:n_channels]
    d_std = d_stats[n_channels:]
    centered = y - mean[None, :]
    safe_std = np.where(std > 0, std, 1.0)
    d_y = d_mean[None, :] / n_frames + np.where(
        std > 0, d_std[None, :] * centered / (n_frames * safe_std[None, :]), 0.0
    )
    d_projection = np.outer(stats, d_embedding)
    return d_y, d_projection


# ---------------------------------------------------------------------------
# Additive angular margin softmax.
# ---------------------------------------------------------------------------


def aam_softmax_loss(
    embeddings: np.ndarray,
    labels: np.ndarray,
    class_weights: np.ndarray,
    s: float = 30.0,
    m: float = 0.2,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean additive-angular-margin softmax loss and its gradients.

    The target-class logit is ``s * cos(theta_y + m)`` with
    ``cos(theta_y + m) = cos(theta_y) cos(m) - sin(theta_y) sin(m)`` and
    ``sin(theta_y) = sqrt(max(1 - cos^2, 0))``; other logits are
    ``s * cos(theta_j)``. Angles are measured between the L2-normalized
    embedding and the (assumed unit-norm) class weight columns.

    Returns ``(loss, d_embeddings, d_class_weights)``.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if embeddings.ndim != 2:
        raise ValueError("embeddings must be (batch, dim)")
    batch = embeddings.shape[0]
    if labels.shape != (batch,):
        raise ValueError("labels must be one integer per embedding")
    n_classes = class_weights.shape[1]
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise ValueError("labels out of range")

    norms = np.linalg.norm(embeddings, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero-norm embedding")
    unit = embeddings / norms[:, None]
    cos = unit @ class_weights  # (B, C)
    rows = np.arange(batch)
    cos_y = cos[rows, labels]
    sin_y = np.sqrt(np.clip(1.0 - cos_y**2, 0.0, 1.0))
    cos_m, sin_m = math.cos(m), math.sin(m)

    logits = s * cos
    logits[rows, labels] = s * (cos_y * cos_m - sin_y * sin_m)
    zmax = logits.max(axis=1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(logits - zmax).sum(axis=1))
    loss = float(np.mean(lse - logits[rows, labels]))

    # Backward pass: softmax residual, then the chain through cos(theta).
    p = np.exp(logits - lse[:, None])
    g = p.copy()
    g[rows, labels] -= 1.0
    g /= batch
    dlogit_dcos = np.full_like(cos, s)
    dlogit_dcos[rows, labels] = s * (cos_m + sin_m * cos_y / np.maximum(sin_y, 1e-12))
    g_cos = g * dlogit_dcos
    d_class_weights = unit.T @ g_cos
    d_unit = g_cos @ class_weights.T
    radial = np.sum(d_unit * unit, axis=1, keepdims=True)
    d_embeddings = (d_unit - radial * unit) / norms[:, None]
    return loss, d_embeddings, d_class_weights


# ---------------------------------------------------------------------------
# Adam and the joint loop.
# ---------------------------------------------------------------------------


class AdamOptimizer:
    """Textbook Adam with per-key first/second moment state."""

    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._moments: dict[str, tuple] = {}

    def step(self, key: str, value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if key in self._moments:
            m, v, t = self._moments[key]
        else:
            m, v, t = np.zeros_like(value), np.zeros_like(value), 0
        t += 1
        m = self.beta1 * m + (1.0 - self.beta1) * grad
        v = self.beta2 * v + (1.0 - self.beta2) * grad**2
        self._moments[key] = (m, v, t)
        m_hat = m / (1.0 - self.beta1**t)
        v_hat = v / (1.0 - self.beta2**t)
        return value - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainReport:
    """Outcome of a joint training run."""

    loss_history: list[float]
    param_trajectory: list[CompressorState]
    final_state: CompressorState
    final_head: EmbeddingHead
    config: TrainConfig
    initial_state: CompressorState | None = None
    extras: dict = field(default_factory=dict)


def batch_forward(
    spectrograms, labels, state: CompressorState, head: EmbeddingHead
) -> np.ndarray:
    """Compressed-and-embedded batch, stacked to (batch, embed_dim)."""
    return np.stack([embed(forward(x, state), head) for x in spectrograms])


def evaluate_batch_loss(
    spectrograms, labels, state: CompressorState, head: EmbeddingHead, s: float, m: float
) -> float:
    """Loss of a batch through the full pipeline, without gradients."""
    embeddings = batch_forward(spectrograms, labels, state, head)
    loss, _, _ = aam_softmax_loss(embeddings, np.asarray(labels), head.class_weights, s, m)
    return loss


def _batch_step(spectrograms, labels, state, head, s, m):
    """Forward + backward over one batch.

    Returns (loss, param_grads, d_projection, d_class_weights) where
    param_grads matches ``state.params`` in shape.
    """
    compressed = [forward(x, state) for x in spectrograms]
    embeddings = np.stack([embed(y, head) for y in compressed])
    loss, d_embeddings, d_class_weights = aam_softmax_loss(
        embeddings, np.asarray(labels), head.class_weights, s, m
    )
    d_projection = np.zeros_like(head.projection)
    param_grads = {name: np.zeros_like(values) for name, values in state.params.items()}
    for i, (x, y) in enumerate(zip(spectrograms, compressed)):
        d_y, d_proj_i = embed_backward(d_embeddings[i], y, head)
        d_projection += d_proj_i
        if param_grads:
            bundle = gradients(x, state)
            for name, g in accumulate_param_grads(d_y, bundle, state).items():
                param_grads[name] += g
    return loss, param_grads, d_projection, d_class_weights


def train_joint(
    corpus,
    state: CompressorState,
    head: EmbeddingHead,
    config: TrainConfig = TrainConfig(),
    frame_spec: FrameSpec = FrameSpec(),
) -> TrainReport:
    """Jointly train compression parameters and the classifier head.

    Minibatch Adam over the compressor parameters, the projection and the
    class weights; class weight columns are renormalized to unit length
    after every update and compressor parameters are clamped back to their
    valid domains. Deterministic for a fixed corpus and config seed.

    Raises
    ------
    DivergenceError
        If any batch loss turns non-finite.
    """
    data = corpus_spectrograms(corpus, frame_spec)
    if not data:
        raise ValueError("empty corpus")
    n_channels = data[0][0].shape[1]
    labels_all = np.array([label for _, label in data])
    n_classes = head.n_classes
    if np.any(labels_all < 0) or np.any(labels_all >= n_classes):
        raise ValueError("corpus labels exceed the head's class count")
    if head.projection.shape[0] != 2 * n_channels:
        raise ValueError(
            f"head expects {head.projection.shape[0] // 2} channels, corpus has {n_channels}"
        )

    initial_state = state.copy()
    state = state.copy()
    head = head.copy()
    optimizer = AdamOptimizer(learning_rate=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    loss_history: list[float] = []
    trajectory: list[CompressorState] = []

    n = len(data)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            spectrograms = [data[i][0] for i in batch_idx]
            labels = labels_all[batch_idx]
            loss, param_grads, d_projection, d_class_weights = _batch_step(
                spectrograms, labels, state, head, config.s, config.m
            )
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss {loss} at epoch {epoch}, batch starting {start}"
                )
            epoch_loss += loss * len(batch_idx)

            for name, grad in param_grads.items():
                state.params[name] = optimizer.step(f"param:{name}", state.params[name], grad)
            state.clamp()
            head.projection = optimizer.step("projection", head.projection, d_projection)
            new_w = optimizer.step("class_weights", head.class_weights, d_class_weights)
            head.class_weights = new_w / np.linalg.norm(new_w, axis=0, keepdims=True)
        loss_history.append(epoch_loss / n)
        trajectory.append(state.copy())

    return TrainReport(
        loss_history=loss_history,
        param_trajectory=trajectory,
        final_state=state,
        final_head=head,
        config=config,
        initial_state=initial_state,
    )


def embed_utterances(spectrograms, state: CompressorState, head: EmbeddingHead) -> np.ndarray:
    """Embeddings of several utterances under a fixed compressor and head."""
    return np.stack([embed(forward(x, state), head) for x in spectrograms])
