"""Learnable nonlinear compression of STFT magnitude spectrograms.

The package covers the full desk-scale pipeline: WAV ingestion and STFT
magnitudes, static / channel-dependent / multi-regime compression
operators with closed-form gradients, joint training against a toy
speaker-classification head, and verification scoring (EER, minDCF).
"""

from .compression import (
    CLAMP_BOUNDS,
    CompressorKind,
    CompressorState,
    DEFAULT_INPUT_FLOOR,
    DesignMode,
    GradientBundle,
    RegimeSpec,
    compress_drc,
    compress_log,
    compress_multi_regime,
    compress_offset_log,
    compress_power,
    forward,
    grad_drc,
    grad_offset_log,
    grad_power,
    gradients,
    init_params,
    preset_state,
)
from .estimators import CompressionTransformer, SpeakerEmbedder, SpectrogramTransformer
from .frontend import FrameSpec, Waveform, load_wav, stft_magnitude
from .gradcheck import GradientCheckReport, run_full_gradient_suite, run_gradient_check
from .metrics import (
    EvalConfig,
    EvalReport,
    ScoreSet,
    Trial,
    compute_eer,
    compute_min_dcf,
    cosine_score,
    evaluate_scores,
    pool_score_sets,
    read_trial_list,
    score_trials,
)
from .training import (
    AdamOptimizer,
    EmbeddingHead,
    SyntheticCorpus,
    TrainConfig,
    TrainReport,
    aam_softmax_loss,
    embed,
    embed_backward,
    embed_utterances,
    gen_synthetic_corpus,
    init_head,
    train_joint,
    utterance_stats,
)

__version__ = "0.1.0"

__all__ = [
    "AdamOptimizer",
    "CLAMP_BOUNDS",
    "CompressionTransformer",
    "CompressorKind",
    "CompressorState",
    "DEFAULT_INPUT_FLOOR",
    "DesignMode",
    "EmbeddingHead",
    "EvalConfig",
    "EvalReport",
    "FrameSpec",
    "GradientBundle",
    "GradientCheckReport",
    "RegimeSpec",
    "ScoreSet",
    "SpeakerEmbedder",
    "SpectrogramTransformer",
    "SyntheticCorpus",
    "TrainConfig",
    "TrainReport",
    "Trial",
    "Waveform",
    "aam_softmax_loss",
    "compress_drc",
    "compress_log",
    "compress_multi_regime",
    "compress_offset_log",
    "compress_power",
    "compute_eer",
    "compute_min_dcf",
    "cosine_score",
    "embed",
    "embed_backward",
    "embed_utterances",
    "evaluate_scores",
    "forward",
    "gen_synthetic_corpus",
    "grad_drc",
    "grad_offset_log",
    "grad_power",
    "gradients",
    "init_head",
    "init_params",
    "load_wav",
    "pool_score_sets",
    "preset_state",
    "read_trial_list",
    "run_full_gradient_suite",
    "run_gradient_check",
    "score_trials",
    "stft_magnitude",
    "train_joint",
    "utterance_stats",
]
