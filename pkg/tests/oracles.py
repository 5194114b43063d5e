"""Independent reference implementations used to verify the library.

Everything here is deliberately naive: direct evaluation of defining
formulas, quadratic sweeps and Python loops, sharing no code path with
the implementations under test.
"""

import numpy as np


def naive_dft_magnitude(frame, n_fft):
    """One-sided DFT magnitude from the defining sum, bin by bin."""
    padded = np.zeros(n_fft, dtype=np.float64)
    padded[: len(frame)] = frame
    n = np.arange(n_fft)
    out = np.empty(n_fft // 2 + 1)
    for k in range(n_fft // 2 + 1):
        angle = -2.0 * np.pi * k * n / n_fft
        out[k] = abs(np.sum(padded * np.cos(angle)) + 1j * np.sum(padded * np.sin(angle)))
    return out


def central_diff(fn, x, step=1e-6):
    """Central finite difference of a scalar-to-scalar (or array) function."""
    return (fn(x + step) - fn(x - step)) / (2.0 * step)


def _sweep_points(target, nontarget):
    """(threshold, P_fa, P_miss) at every midpoint candidate, counted naively."""
    pooled = sorted(set(list(target) + list(nontarget)))
    candidates = [pooled[0] - 1.0]
    for a, b in zip(pooled[:-1], pooled[1:]):
        candidates.append((a + b) / 2.0)
    candidates.append(pooled[-1] + 1.0)
    points = []
    for t in candidates:
        p_fa = sum(1 for s in nontarget if s >= t) / len(nontarget)
        p_miss = sum(1 for s in target if s < t) / len(target)
        points.append((t, p_fa, p_miss))
    return points


def eer_sweep_oracle(target, nontarget):
    """EER by exhaustive threshold sweep with linear interpolation."""
    points = _sweep_points(target, nontarget)
    for k in range(1, len(points)):
        t1, fa1, miss1 = points[k]
        d1 = fa1 - miss1
        if d1 <= 0.0:
            t0, fa0, miss0 = points[k - 1]
            d0 = fa0 - miss0
            lam = d0 / (d0 - d1)
            eer = fa0 + lam * (fa1 - fa0)
            threshold = t0 + lam * (t1 - t0)
            return eer, threshold
    raise AssertionError("no crossing found")


def min_dcf_sweep_oracle(target, nontarget, p_tar=0.01, c_fa=1.0, c_miss=1.0):
    """Normalized minimum detection cost by exhaustive threshold sweep."""
    best = None
    best_t = None
    for t, p_fa, p_miss in _sweep_points(target, nontarget):
        dcf = c_miss * p_tar * p_miss + c_fa * (1.0 - p_tar) * p_fa
        if best is None or dcf < best:
            best = dcf
            best_t = t
    return best / min(c_miss * p_tar, c_fa * (1.0 - p_tar)), best_t


def nearest_mean_accuracy(features, labels):
    """Training accuracy of the closed-form nearest-class-mean discriminant."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    means = {c: features[labels == c].mean(axis=0) for c in classes}
    correct = 0
    for x, y in zip(features, labels):
        pred = min(classes, key=lambda c: np.linalg.norm(x - means[c]))
        correct += pred == y
    return correct / len(labels)
