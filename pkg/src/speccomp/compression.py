"""Nonlinear compression operators for magnitude spectrograms.

Four operator families are provided, each in three designs:

* plain log and offset-log ``ln(x + exp(beta))``
* power compression ``y = x**(1/alpha)``
* dynamic range compression ``y = (x + delta)**r - delta**r``

A design is either static (one scalar per parameter), channel-dependent
(one value per frequency channel), or multi-regime channel-dependent
(N parallel parameter sets whose outputs are averaged). All forward
operators come with closed-form gradients with respect to both their
parameters and their input, so the parameters can be trained jointly
with a downstream network without an autodiff engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ParameterDomainError

DEFAULT_INPUT_FLOOR = 1e-10

# Lower bounds enforced after each training update; keeps learnt values
# directly interpretable while guarding the gradient singularities.
CLAMP_BOUNDS = {"alpha": 0.1, "delta": 0.01, "r": 0.0}


class CompressorKind(str, Enum):
    LOG = "log"
    OFFSET_LOG = "offset-log"
    POWER = "power"
    DRC = "drc"


class DesignMode(str, Enum):
    STATIC = "static"
    CHANNEL_DEPENDENT = "cd"
    MULTI_REGIME_CD = "mr-cd"


PARAM_NAMES: dict[CompressorKind, tuple[str, ...]] = {
    CompressorKind.LOG: (),
    CompressorKind.OFFSET_LOG: ("beta",),
    CompressorKind.POWER: ("alpha",),
    CompressorKind.DRC: ("delta", "r"),
}

# Reference operating points used for kernelized initialization: the
# static value each channel starts from, and the (min, max) range the
# multi-regime design spreads its N regimes across.
PRESET_STATIC_VALUES: dict[str, dict[str, float]] = {
    "cube-root": {"alpha": 3.0},
    "power-law": {"alpha": 15.0},
    "drc": {"delta": 2.0, "r": 0.5},
}
PRESET_REGIME_RANGES: dict[str, dict[str, tuple[float, float]]] = {
    "cube-root": {"alpha": (1.0, 3.0)},
    "power-law": {"alpha": (1.0, 15.0)},
    "drc": {"delta": (1.0, 2.0), "r": (0.0, 1.0)},
}
PRESET_KINDS: dict[str, CompressorKind] = {
    "log": CompressorKind.LOG,
    "offset-log": CompressorKind.OFFSET_LOG,
    "cube-root": CompressorKind.POWER,
    "power-law": CompressorKind.POWER,
    "drc": CompressorKind.DRC,
}


def check_spectrogram(x, n_channels: int | None = None) -> np.ndarray:
    """Validate a (T, F) magnitude matrix: 2-D, finite, nonnegative."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"spectrogram must be 2-D (frames, channels), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("spectrogram contains non-finite entries")
    if np.any(x < 0):
        raise ValueError("spectrogram contains negative magnitudes")
    if n_channels is not None and x.shape[1] != n_channels:
        raise ValueError(f"expected {n_channels} channels, got {x.shape[1]}")
    return x


# ---------------------------------------------------------------------------
# Elementwise forward operators and their gradients.
#
# Parameters broadcast against the input, so they may be scalars, length-F
# vectors, or stacked (N, 1, F) regime blocks. Every output location (t, f)
# depends only on x[t, f] and the channel-f parameters, which keeps the
# gradients elementwise as well.
# ---------------------------------------------------------------------------


def _check_positive(name: str, value) -> np.ndarray:
    value = np.asarray(value, dtype=np.float64)
    if np.any(value <= 0) or not np.all(np.isfinite(value)):
        raise ParameterDomainError(f"{name} entries must be positive and finite")
    return value


def _check_nonnegative(name: str, value) -> np.ndarray:
    value = np.asarray(value, dtype=np.float64)
    if np.any(value < 0) or not np.all(np.isfinite(value)):
        raise ParameterDomainError(f"{name} entries must be nonnegative and finite")
    return value


def compress_log(x, floor: float = DEFAULT_INPUT_FLOOR) -> np.ndarray:
    """``ln(max(x, floor))``. The floor removes the singularity at zero."""
    return np.log(np.maximum(x, floor))


def grad_log_input(x, floor: float = DEFAULT_INPUT_FLOOR) -> np.ndarray:
    """d/dx of :func:`compress_log`; zero where the input sits below the floor."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > floor, 1.0 / np.maximum(x, floor), 0.0)


def compress_offset_log(x, beta) -> np.ndarray:
    """``ln(x + exp(beta))``; exp(beta) keeps the argument strictly positive."""
    beta = np.asarray(beta, dtype=np.float64)
    return np.log(x + np.exp(beta))


def grad_offset_log(x, beta) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of :func:`compress_offset_log`.

    Returns ``(dy_dbeta, dy_dx)`` where ``dy_dbeta = exp(beta)/(x+exp(beta))``
    lies in (0, 1] and ``dy_dx = 1/(x+exp(beta))``.
    """
    x = np.asarray(x, dtype=np.float64)
    offset = np.exp(np.asarray(beta, dtype=np.float64))
    denom = x + offset
    return offset / denom, 1.0 / denom


def compress_power(x, alpha, floor: float = DEFAULT_INPUT_FLOOR) -> np.ndarray:
    """``max(x, floor) ** (1/alpha)``; alpha > 0 controls the strength."""
    alpha = _check_positive("alpha", alpha)
    return np.maximum(x, floor) ** (1.0 / alpha)


def grad_power(x, alpha, floor: float = DEFAULT_INPUT_FLOOR) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of :func:`compress_power`.

    With ``xf = max(x, floor)``:

    * ``dy_dalpha = -xf**(1/alpha) * ln(xf) / alpha**2``
    * ``dy_dx = (1/alpha) * xf**(1/alpha - 1)`` (zero below the floor)
    """
    alpha = _check_positive("alpha", alpha)
    x = np.asarray(x, dtype=np.float64)
    xf = np.maximum(x, floor)
    y = xf ** (1.0 / alpha)
    dy_dalpha = -y * np.log(xf) / alpha**2
    dy_dx = np.where(x > floor, xf ** (1.0 / alpha - 1.0) / alpha, 0.0)
    return dy_dalpha, dy_dx


def compress_drc(x, delta, r) -> np.ndarray:
    """``(x + delta)**r - delta**r`` with bias delta > 0 and exponent r >= 0."""
    delta = _check_positive("delta", delta)
    r = _check_nonnegative("r", r)
    return (x + delta) ** r - delta**r


def grad_drc(x, delta, r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of :func:`compress_drc`.

    Returns ``(dy_ddelta, dy_dr, dy_dx)``:

    * ``dy_ddelta = r * ((x+delta)**(r-1) - delta**(r-1))``
    * ``dy_dr = (x+delta)**r * ln(x+delta) - delta**r * ln(delta)``
    * ``dy_dx = r * (x+delta)**(r-1)``

    At r == 0 the exponent gradient is evaluated through its limit
    ``log1p(x/delta)``, which avoids the ``ln(x+delta) - ln(delta)``
    cancellation for small x; the delta and input gradients vanish there
    through the leading factor r.
    """
    delta = _check_positive("delta", delta)
    r = _check_nonnegative("r", r)
    x = np.asarray(x, dtype=np.float64)
    xd = x + delta
    dy_ddelta = r * (xd ** (r - 1.0) - delta ** (r - 1.0))
    dy_dr = np.where(
        r == 0.0,
        np.log1p(x / delta),
        xd**r * np.log(xd) - delta**r * np.log(delta),
    )
    dy_dx = r * xd ** (r - 1.0)
    return dy_ddelta, dy_dr, dy_dx


# ---------------------------------------------------------------------------
# Parameter state: design modes, initialization and stacked evaluation.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeSpec:
    """Evenly spaced regime initialization over [p_min, p_max]."""

    p_min: float
    p_max: float
    n: int

    def __post_init__(self):
        if not (self.p_min <= self.p_max):
            raise ValueError(f"need p_min <= p_max, got ({self.p_min}, {self.p_max})")
        if self.n < 1:
            raise ValueError(f"regime count must be positive, got {self.n}")

    def values(self) -> np.ndarray:
        """Regime i gets ``p_min + (p_max - p_min) * i / (n - 1)``, i = 0..n-1."""
        if self.n == 1:
            return np.array([self.p_min], dtype=np.float64)
        return np.linspace(self.p_min, self.p_max, self.n)


@dataclass
class GradientBundle:
    """Sensitivities of a compressor output.

    ``d_output_d_param`` maps each parameter name to an (N, T, F) array:
    entry [i, t, f] is the derivative of the averaged output y[t, f] with
    respect to the regime-i, channel-f parameter (the 1/N averaging factor
    is already included). ``d_output_d_input`` is the (T, F) derivative of
    y with respect to x.
    """

    d_output_d_param: dict[str, np.ndarray] = field(default_factory=dict)
    d_output_d_input: np.ndarray | None = None


@dataclass
class CompressorState:
    """A compressor kind plus its design mode and parameter arrays.

    ``params`` maps parameter names to (n_regimes, n_channels) arrays.
    Static designs store a single scalar per parameter as shape (1, 1),
    channel-dependent designs shape (1, F), multi-regime (N, F).
    """

    kind: CompressorKind
    mode: DesignMode
    params: dict[str, np.ndarray]
    input_floor: float = DEFAULT_INPUT_FLOOR

    def __post_init__(self):
        self.kind = CompressorKind(self.kind)
        self.mode = DesignMode(self.mode)
        if self.input_floor <= 0:
            raise ParameterDomainError(f"input_floor must be positive, got {self.input_floor}")
        expected = PARAM_NAMES[self.kind]
        if tuple(self.params.keys()) != expected:
            raise ParameterDomainError(
                f"{self.kind.value} expects parameters {expected}, got {tuple(self.params)}"
            )
        self.params = {
            name: np.array(values, dtype=np.float64, ndmin=2)
            for name, values in self.params.items()
        }
        shapes = {values.shape for values in self.params.values()}
        if expected:
            if len(shapes) != 1:
                raise ParameterDomainError(f"inconsistent parameter shapes: {shapes}")
            n_regimes, n_channels = shapes.pop()
            if self.mode is not DesignMode.MULTI_REGIME_CD and n_regimes != 1:
                raise ParameterDomainError(f"{self.mode.value} design allows a single regime")
            if self.mode is DesignMode.STATIC and n_channels != 1:
                raise ParameterDomainError("static design carries one scalar per parameter")
        self._validate_domains()

    def _validate_domains(self):
        if "alpha" in self.params:
            _check_positive("alpha", self.params["alpha"])
        if "delta" in self.params:
            _check_positive("delta", self.params["delta"])
        if "r" in self.params:
            _check_nonnegative("r", self.params["r"])
        if "beta" in self.params and not np.all(np.isfinite(self.params["beta"])):
            raise ParameterDomainError("beta entries must be finite")

    @property
    def n_regimes(self) -> int:
        if not self.params:
            return 1
        return next(iter(self.params.values())).shape[0]

    @property
    def n_channels(self) -> int:
        if not self.params:
            return 1
        return next(iter(self.params.values())).shape[1]

    def copy(self) -> "CompressorState":
        return CompressorState(
            kind=self.kind,
            mode=self.mode,
            params={name: values.copy() for name, values in self.params.items()},
            input_floor=self.input_floor,
        )

    def clamp(self) -> None:
        """Project parameters back onto their valid training domains."""
        for name, lower in CLAMP_BOUNDS.items():
            if name in self.params:
                np.maximum(self.params[name], lower, out=self.params[name])


def init_params(
    kind: CompressorKind,
    mode: DesignMode,
    n_channels: int,
    *,
    regime_specs: dict[str, RegimeSpec] | None = None,
    static_values: dict[str, float] | None = None,
    n_regimes: int = 3,
    input_floor: float = DEFAULT_INPUT_FLOOR,
    seed: int = 0,
) -> CompressorState:
    """Kernelized initialization of a compressor state.

    Static and channel-dependent designs start every channel at the given
    static value. Multi-regime designs spread each parameter over its
    [p_min, p_max] range with ``n_regimes`` evenly spaced values (endpoints
    included); at least two regimes are required. Offset-log beta values
    are drawn per channel from a standard normal seeded with ``seed``.

    Unspecified values fall back to the cube-root and DRC reference points.
    """
    kind = CompressorKind(kind)
    mode = DesignMode(mode)
    if n_channels <= 0:
        raise ValueError(f"channel count must be positive, got {n_channels}")
    if mode is DesignMode.MULTI_REGIME_CD and n_regimes < 2:
        raise ValueError(f"multi-regime design needs at least 2 regimes, got {n_regimes}")

    defaults_static = {"alpha": 3.0, "delta": 2.0, "r": 0.5}
    defaults_range = {"alpha": (1.0, 3.0), "delta": (1.0, 2.0), "r": (0.0, 1.0)}
    static_values = {**defaults_static, **(static_values or {})}

    width = 1 if mode is DesignMode.STATIC else n_channels
    params: dict[str, np.ndarray] = {}

    if kind is CompressorKind.OFFSET_LOG:
        rng = np.random.default_rng(seed)
        rows = n_regimes if mode is DesignMode.MULTI_REGIME_CD else 1
        params["beta"] = rng.standard_normal((rows, width))
    elif mode is DesignMode.MULTI_REGIME_CD:
        for name in PARAM_NAMES[kind]:
            if regime_specs and name in regime_specs:
                spec = regime_specs[name]
                if spec.n != n_regimes:
                    raise ValueError(
                        f"regime spec for {name!r} has n={spec.n}, expected {n_regimes}"
                    )
            else:
                lo, hi = defaults_range[name]
                spec = RegimeSpec(lo, hi, n_regimes)
            params[name] = np.repeat(spec.values()[:, None], width, axis=1)
    else:
        for name in PARAM_NAMES[kind]:
            params[name] = np.full((1, width), float(static_values[name]))

    return CompressorState(kind=kind, mode=mode, params=params, input_floor=input_floor)


def preset_state(
    preset: str,
    mode: DesignMode,
    n_channels: int,
    *,
    n_regimes: int = 3,
    input_floor: float = DEFAULT_INPUT_FLOOR,
    seed: int = 0,
    static_overrides: dict[str, float] | None = None,
    range_overrides: dict[str, tuple[float, float]] | None = None,
) -> CompressorState:
    """Build a state from a named preset (log, offset-log, cube-root, power-law, drc)."""
    if preset not in PRESET_KINDS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESET_KINDS)}")
    kind = PRESET_KINDS[preset]
    statics = dict(PRESET_STATIC_VALUES.get(preset, {}))
    if static_overrides:
        statics.update(static_overrides)
    ranges = dict(PRESET_REGIME_RANGES.get(preset, {}))
    if range_overrides:
        ranges.update(range_overrides)
    specs = {name: RegimeSpec(lo, hi, n_regimes) for name, (lo, hi) in ranges.items()}
    return init_params(
        kind,
        mode,
        n_channels,
        regime_specs=specs,
        static_values=statics,
        n_regimes=n_regimes,
        input_floor=input_floor,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Stacked evaluation over regimes.
# ---------------------------------------------------------------------------


def _regime_params(state: CompressorState) -> dict[str, np.ndarray]:
    # (N, C) -> (N, 1, C) so each regime broadcasts against a (T, F) input.
    return {name: values[:, None, :] for name, values in state.params.items()}


def _check_input(x, state: CompressorState) -> np.ndarray:
    x = check_spectrogram(x)
    if (
        state.params
        and state.mode is not DesignMode.STATIC
        and state.n_channels != x.shape[1]
    ):
        raise ValueError(
            f"state has {state.n_channels} channels but input has {x.shape[1]}"
        )
    return x


def forward(x, state: CompressorState) -> np.ndarray:
    """Apply a compressor state to a (T, F) magnitude matrix.

    Multi-regime designs evaluate every regime and average; single-regime
    designs reduce to the plain channel-dependent (or static) formula.
    """
    x = _check_input(x, state)
    p = _regime_params(state)
    if state.kind is CompressorKind.LOG:
        stacked = compress_log(x, state.input_floor)[None, :, :]
    elif state.kind is CompressorKind.OFFSET_LOG:
        stacked = compress_offset_log(x[None, :, :], p["beta"])
    elif state.kind is CompressorKind.POWER:
        stacked = compress_power(x[None, :, :], p["alpha"], state.input_floor)
    else:
        stacked = compress_drc(x[None, :, :], p["delta"], p["r"])
    return stacked.mean(axis=0)


def compress_multi_regime(x, state: CompressorState) -> np.ndarray:
    """Average of the per-regime outputs; requires a multi-regime state."""
    if state.mode is not DesignMode.MULTI_REGIME_CD:
        raise ValueError("compress_multi_regime requires a multi-regime state")
    return forward(x, state)


def gradients(x, state: CompressorState) -> GradientBundle:
    """Closed-form gradients of :func:`forward` at ``x``.

    Parameter sensitivities come back as (N, T, F) arrays with the 1/N
    regime-averaging factor folded in; the input sensitivity is (T, F).
    """
    x = _check_input(x, state)
    p = _regime_params(state)
    n = state.n_regimes
    shape = (n, x.shape[0], x.shape[1])
    d_param: dict[str, np.ndarray] = {}

    if state.kind is CompressorKind.LOG:
        d_input = grad_log_input(x, state.input_floor)
    elif state.kind is CompressorKind.OFFSET_LOG:
        d_beta, d_x = grad_offset_log(x[None, :, :], p["beta"])
        d_param["beta"] = np.broadcast_to(d_beta, shape) / n
        d_input = d_x.mean(axis=0)
    elif state.kind is CompressorKind.POWER:
        d_alpha, d_x = grad_power(x[None, :, :], p["alpha"], state.input_floor)
        d_param["alpha"] = np.broadcast_to(d_alpha, shape) / n
        d_input = np.broadcast_to(d_x, shape).mean(axis=0)
    else:
        d_delta, d_r, d_x = grad_drc(x[None, :, :], p["delta"], p["r"])
        d_param["delta"] = np.broadcast_to(d_delta, shape) / n
        d_param["r"] = np.broadcast_to(d_r, shape) / n
        d_input = np.broadcast_to(d_x, shape).mean(axis=0)

    return GradientBundle(d_output_d_param=d_param, d_output_d_input=d_input)


def accumulate_param_grads(
    d_loss_d_output: np.ndarray, bundle: GradientBundle, state: CompressorState
) -> dict[str, np.ndarray]:
    """Chain a (T, F) loss gradient through a bundle onto the parameter arrays.

    Returns arrays shaped like ``state.params``; static designs additionally
    sum over channels so the result stays a single scalar per parameter.
    """
    grads: dict[str, np.ndarray] = {}
    for name, sens in bundle.d_output_d_param.items():
        g = np.einsum("tf,ntf->nf", d_loss_d_output, sens)
        if state.mode is DesignMode.STATIC:
            g = g.sum(axis=1, keepdims=True)
        grads[name] = g
    return grads
