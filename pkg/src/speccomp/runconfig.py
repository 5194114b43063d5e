"""Declarative run configuration.

A run is described by an INI-style file with four sections (frontend,
compressor, train, eval). Every key has a typed default; unknown sections
or keys are rejected. Command-line ``--set section.key=value`` overrides
win over the file, and the ``SPECCOMP_SEED`` environment variable
overrides every seed. The canonical rendering of the effective
configuration is embedded into every output artifact.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

from .compression import CompressorState, DesignMode, PRESET_KINDS, preset_state
from .errors import ConfigError
from .frontend import FrameSpec
from .metrics import EvalConfig
from .training import TrainConfig

SEED_ENV_VAR = "SPECCOMP_SEED"

# (type, default); None defaults mean "unset" and are omitted from the
# canonical rendering.
_SCHEMA: dict[str, dict[str, tuple[type, object]]] = {
    "frontend": {
        "sample_rate": (int, 16000),
        "window_len": (int, 400),
        "hop": (int, 160),
        "n_fft": (int, 512),
    },
    "compressor": {
        "preset": (str, "cube-root"),
        "mode": (str, "cd"),
        "n_regimes": (int, 3),
        "input_floor": (float, 1e-10),
        "seed": (int, 0),
        "alpha": (float, None),
        "delta": (float, None),
        "r": (float, None),
        "alpha_min": (float, None),
        "alpha_max": (float, None),
        "delta_min": (float, None),
        "delta_max": (float, None),
        "r_min": (float, None),
        "r_max": (float, None),
    },
    "train": {
        "s": (float, 30.0),
        "m": (float, 0.2),
        "learning_rate": (float, 1e-3),
        "epochs": (int, 20),
        "batch_size": (int, 32),
        "seed": (int, 0),
        "embed_dim": (int, 64),
        "n_speakers": (int, 20),
        "utts_per_speaker": (int, 10),
        "duration_s": (float, 2.0),
        "corpus_seed": (int, 0),
    },
    "eval": {
        "p_tar": (float, 0.01),
        "c_fa": (float, 1.0),
        "c_miss": (float, 1.0),
    },
}

_SEED_KEYS = (("compressor", "seed"), ("train", "seed"), ("train", "corpus_seed"))


def _convert(section: str, key: str, text: str):
    typ, _ = _SCHEMA[section][key]
    try:
        return typ(text)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {text!r} as {typ.__name__}") from exc


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration values, keyed by section and name."""

    values: dict

    def get(self, section: str, key: str):
        return self.values[section][key]

    # -- typed views -------------------------------------------------------

    def frame_spec(self) -> FrameSpec:
        f = self.values["frontend"]
        return FrameSpec(window_len=f["window_len"], hop=f["hop"], n_fft=f["n_fft"])

    @property
    def sample_rate(self) -> int:
        return self.values["frontend"]["sample_rate"]

    @property
    def n_channels(self) -> int:
        return self.values["frontend"]["n_fft"] // 2 + 1

    def train_config(self) -> TrainConfig:
        t = self.values["train"]
        try:
            return TrainConfig(
                s=t["s"],
                m=t["m"],
                learning_rate=t["learning_rate"],
                epochs=t["epochs"],
                batch_size=t["batch_size"],
                seed=t["seed"],
            )
        except ValueError as exc:
            raise ConfigError(f"[train]: {exc}") from exc

    def eval_config(self) -> EvalConfig:
        e = self.values["eval"]
        try:
            return EvalConfig(p_tar=e["p_tar"], c_fa=e["c_fa"], c_miss=e["c_miss"])
        except ValueError as exc:
            raise ConfigError(f"[eval]: {exc}") from exc

    def build_state(self) -> CompressorState:
        c = self.values["compressor"]
        preset = c["preset"]
        if preset not in PRESET_KINDS:
            raise ConfigError(
                f"[compressor] preset: unknown {preset!r}, choose from {sorted(PRESET_KINDS)}"
            )
        try:
            mode = DesignMode(c["mode"])
        except ValueError:
            raise ConfigError(
                f"[compressor] mode: unknown {c['mode']!r}, choose from "
                f"{[m.value for m in DesignMode]}"
            ) from None
        statics = {name: c[name] for name in ("alpha", "delta", "r") if c[name] is not None}
        ranges = {}
        for name in ("alpha", "delta", "r"):
            lo, hi = c[f"{name}_min"], c[f"{name}_max"]
            if (lo is None) != (hi is None):
                raise ConfigError(f"[compressor] {name}_min/{name}_max must be set together")
            if lo is not None:
                ranges[name] = (lo, hi)
        try:
            return preset_state(
                preset,
                mode,
                self.n_channels,
                n_regimes=c["n_regimes"],
                input_floor=c["input_floor"],
                seed=c["seed"],
                static_overrides=statics or None,
                range_overrides=ranges or None,
            )
        except ValueError as exc:
            raise ConfigError(f"[compressor]: {exc}") from exc

    def canonical_text(self) -> str:
        """Stable INI rendering of the effective configuration."""
        lines = []
        for section, keys in _SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                value = self.values[section][key]
                if value is None:
                    continue
                lines.append(f"{key} = {value!r}" if isinstance(value, str) else f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)


def default_config() -> RunConfig:
    values = {
        section: {key: default for key, (_, default) in keys.items()}
        for section, keys in _SCHEMA.items()
    }
    return RunConfig(values=values)


def load_config(
    path=None, overrides=(), env: dict | None = None
) -> RunConfig:
    """Load a run configuration.

    Precedence, lowest to highest: built-in defaults, the config file,
    the ``SPECCOMP_SEED`` environment variable (seeds only), then
    ``section.key=value`` overrides.
    """
    cfg = default_config()
    values = {section: dict(keys) for section, keys in cfg.values.items()}

    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
        except (configparser.Error, UnicodeDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for section in parser.sections():
            if section not in _SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, text in parser.items(section):
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
                values[section][key] = _convert(section, key, text)

    env = os.environ if env is None else env
    if SEED_ENV_VAR in env:
        try:
            seed = int(env[SEED_ENV_VAR])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from exc
        for section, key in _SEED_KEYS:
            values[section][key] = seed

    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, text = item.split("=", 1)
        section, key = target.split(".", 1)
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown configuration key {section}.{key}")
        values[section][key] = _convert(section, key, text)

    return RunConfig(values=values)
