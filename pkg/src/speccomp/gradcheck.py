"""Finite-difference verification of the analytic compressor gradients.

Because every output location depends only on its own input cell and its
own channel's parameters, perturbing a whole parameter row (or the whole
input matrix) by one step yields the full elementwise sensitivity in two
forward evaluations, so thousands of points are checked per suite at
negligible cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compression import (
    CompressorKind,
    CompressorState,
    DesignMode,
    forward,
    gradients,
    init_params,
)

# Sampling domains keep points away from the input floor and from the
# parameter-domain edges where the derivatives become one-sided.
X_RANGE = (1e-3, 10.0)
PARAM_RANGES = {"alpha": (0.2, 20.0), "delta": (0.1, 3.0), "r": (0.01, 1.0), "beta": (-2.0, 2.0)}


@dataclass
class GradientFailure:
    param: str
    x: float
    param_value: float
    analytic: float
    numeric: float
    rel_err: float


@dataclass
class GradientCheckReport:
    kind: CompressorKind
    mode: DesignMode
    n_points: int
    tolerance: float
    max_rel_err: float = 0.0
    failures: list[GradientFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    # Relative above unit gradient scale, absolute below: central differences
    # at step 1e-6 carry ~1e-10 absolute cancellation noise, so a purely
    # relative comparison is meaningless where the true gradient vanishes
    # (e.g. the power compressor at x = 1). Any wrong gradient with absolute
    # error >= the tolerance still fails.
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return np.abs(analytic - numeric) / scale


def _random_state(kind, mode, rng, n_channels, n_regimes) -> CompressorState:
    state = init_params(kind, mode, n_channels, n_regimes=n_regimes, seed=int(rng.integers(2**31)))
    for name, values in state.params.items():
        lo, hi = PARAM_RANGES[name]
        state.params[name] = rng.uniform(lo, hi, size=values.shape)
    return state


def _with_param(state: CompressorState, name: str, regime: int, offset: float) -> CompressorState:
    shifted = state.copy()
    shifted.params[name][regime, :] += offset
    return shifted


def _record(report, tol, rel, analytic, numeric, x, param_name, param_row):
    report.max_rel_err = max(report.max_rel_err, float(rel.max()))
    if np.any(rel >= tol):
        bad = np.argwhere(rel >= tol)
        for t, f in bad[:10]:
            report.failures.append(
                GradientFailure(
                    param=param_name,
                    x=float(x[t, f]),
                    param_value=float(param_row[min(f, param_row.size - 1)]),
                    analytic=float(analytic[t, f]),
                    numeric=float(numeric[t, f]),
                    rel_err=float(rel[t, f]),
                )
            )


def run_gradient_check(
    kind: CompressorKind,
    mode: DesignMode,
    *,
    seed: int = 0,
    n_points: int = 1000,
    tolerance: float = 1e-5,
    step: float = 1e-6,
    gradient_fn=None,
) -> GradientCheckReport:
    """Compare analytic gradients against central finite differences.

    ``n_points`` random (input, parameter) points are generated on a grid
    of 8 channels; every parameter of every regime and the input itself
    are checked. ``gradient_fn`` may replace the analytic gradient
    computation (used by the negative-control tests).
    """
    kind = CompressorKind(kind)
    mode = DesignMode(mode)
    grad = gradient_fn or gradients
    rng = np.random.default_rng(seed)
    n_channels = 8
    n_frames = max(1, -(-n_points // n_channels))  # ceil division
    n_regimes = 3 if mode is DesignMode.MULTI_REGIME_CD else 1

    state = _random_state(kind, mode, rng, n_channels, n_regimes)
    lo, hi = X_RANGE
    x = np.exp(rng.uniform(np.log(lo), np.log(hi), size=(n_frames, n_channels)))

    report = GradientCheckReport(
        kind=kind, mode=mode, n_points=x.size, tolerance=tolerance
    )
    bundle = grad(x, state)

    for name, sens in bundle.d_output_d_param.items():
        for i in range(state.n_regimes):
            y_plus = forward(x, _with_param(state, name, i, +step))
            y_minus = forward(x, _with_param(state, name, i, -step))
            numeric = (y_plus - y_minus) / (2.0 * step)
            rel = _rel_err(sens[i], numeric)
            _record(report, tolerance, rel, sens[i], numeric, x, f"{name}[{i}]",
                    state.params[name][i])

    numeric_dx = (forward(x + step, state) - forward(x - step, state)) / (2.0 * step)
    rel = _rel_err(bundle.d_output_d_input, numeric_dx)
    _record(report, tolerance, rel, bundle.d_output_d_input, numeric_dx, x, "input",
            np.zeros(1))

    if kind is CompressorKind.DRC:
        _check_zero_exponent(report, state, x, grad, step, tolerance)
    return report


def _check_zero_exponent(report, state, x, grad, step, tolerance):
    """Exponent gradient at r = 0, via a second-order one-sided difference."""
    zero_r = state.copy()
    zero_r.params["r"][:] = 0.0
    bundle = grad(x, zero_r)
    sens = bundle.d_output_d_param["r"]
    for i in range(zero_r.n_regimes):
        y0 = forward(x, zero_r)
        y1 = forward(x, _with_param(zero_r, "r", i, step))
        y2 = forward(x, _with_param(zero_r, "r", i, 2.0 * step))
        numeric = (-3.0 * y0 + 4.0 * y1 - y2) / (2.0 * step)
        rel = _rel_err(sens[i], numeric)
        _record(report, tolerance, rel, sens[i], numeric, x, f"r[{i}]@0",
                zero_r.params["r"][i])


def run_full_gradient_suite(seed: int = 0, n_points: int = 1000, tolerance: float = 1e-5):
    """Gradient checks for every kind in every design mode."""
    reports = []
    for kind in CompressorKind:
        for mode in DesignMode:
            reports.append(
                run_gradient_check(
                    kind, mode, seed=seed, n_points=n_points, tolerance=tolerance
                )
            )
    return reports
