"""Verification scoring: cosine similarity, EER and minDCF.

Threshold conventions are fixed so that results are reproducible bit for
bit: a trial with score >= t is accepted; candidate thresholds are the
midpoints between consecutive distinct scores plus one sentinel below the
minimum (accept everything) and one above the maximum (reject everything).
The equal error rate interpolates linearly between the two operating
points that bracket the crossing of the false-acceptance and
false-rejection curves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrialResolutionError


@dataclass(frozen=True)
class ScoreSet:
    """Labeled trial scores, split into target and nontarget lists."""

    target: np.ndarray
    nontarget: np.ndarray

    def __post_init__(self):
        target = np.asarray(self.target, dtype=np.float64).ravel()
        nontarget = np.asarray(self.nontarget, dtype=np.float64).ravel()
        if target.size == 0 or nontarget.size == 0:
            raise ValueError("both target and nontarget score lists must be nonempty")
        if not (np.all(np.isfinite(target)) and np.all(np.isfinite(nontarget))):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "nontarget", nontarget)


@dataclass(frozen=True)
class EvalConfig:
    """Operating-point constants for the detection cost function."""

    p_tar: float = 0.01
    c_fa: float = 1.0
    c_miss: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.p_tar < 1.0):
            raise ValueError(f"p_tar must lie in (0, 1), got {self.p_tar}")
        if self.c_fa <= 0 or self.c_miss <= 0:
            raise ValueError("detection costs must be positive")


@dataclass(frozen=True)
class EvalReport:
    eer: float
    eer_threshold: float
    min_dcf: float
    dcf_threshold: float

    def as_dict(self) -> dict:
        return {
            "eer": self.eer,
            "eer_percent": 100.0 * self.eer,
            "eer_threshold": self.eer_threshold,
            "min_dcf": self.min_dcf,
            "dcf_threshold": self.dcf_threshold,
        }


def cosine_score(e1, e2) -> float:
    """Inner product of the L2-normalized vectors; raises on zero norm."""
    e1 = np.asarray(e1, dtype=np.float64).ravel()
    e2 = np.asarray(e2, dtype=np.float64).ravel()
    n1 = np.linalg.norm(e1)
    n2 = np.linalg.norm(e2)
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("cosine score undefined for zero-norm embeddings")
    return float(np.dot(e1, e2) / (n1 * n2))


def candidate_thresholds(scores: ScoreSet) -> np.ndarray:
    """Midpoints between consecutive distinct scores plus accept/reject sentinels."""
    pooled = np.unique(np.concatenate([scores.target, scores.nontarget]))
    mids = 0.5 * (pooled[:-1] + pooled[1:])
    return np.concatenate([[pooled[0] - 1.0], mids, [pooled[-1] + 1.0]])


def _error_rates(scores: ScoreSet, thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(P_fa, P_miss) at each threshold under the score >= t acceptance rule."""
    tar = np.sort(scores.target)
    non = np.sort(scores.nontarget)
    p_fa = (non.size - np.searchsorted(non, thresholds, side="left")) / non.size
    p_miss = np.searchsorted(tar, thresholds, side="left") / tar.size
    return p_fa, p_miss


def compute_eer(scores: ScoreSet) -> tuple[float, float]:
    """Equal error rate and its threshold.

    Walks the discrete operating points in threshold order and linearly
    interpolates between the two points where the difference between the
    false-acceptance and false-rejection rates changes sign. An exact
    crossing at an operating point is returned as-is.
    """
    thresholds = candidate_thresholds(scores)
    p_fa, p_miss = _error_rates(scores, thresholds)
    diff = p_fa - p_miss
    # diff starts at +1 (accept all) and ends at -1 (reject all), and is
    # non-increasing, so the first nonpositive entry brackets the crossing.
    k = int(np.argmax(diff <= 0.0))
    lam = diff[k - 1] / (diff[k - 1] - diff[k])
    eer = p_fa[k - 1] + lam * (p_fa[k] - p_fa[k - 1])
    threshold = thresholds[k - 1] + lam * (thresholds[k] - thresholds[k - 1])
    return float(eer), float(threshold)


def compute_min_dcf(scores: ScoreSet, cfg: EvalConfig = EvalConfig()) -> tuple[float, float]:
    """Minimum normalized detection cost and the threshold achieving it.

    ``DCF(t) = c_miss * p_tar * P_miss(t) + c_fa * (1 - p_tar) * P_fa(t)``
    is minimized over the candidate thresholds and normalized by the cost
    of the better trivial decision, ``min(c_miss * p_tar, c_fa * (1 - p_tar))``.
    """
    thresholds = candidate_thresholds(scores)
    p_fa, p_miss = _error_rates(scores, thresholds)
    dcf = cfg.c_miss * cfg.p_tar * p_miss + cfg.c_fa * (1.0 - cfg.p_tar) * p_fa
    norm = min(cfg.c_miss * cfg.p_tar, cfg.c_fa * (1.0 - cfg.p_tar))
    k = int(np.argmin(dcf))
    return float(dcf[k] / norm), float(thresholds[k])


def evaluate_scores(scores: ScoreSet, cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Bundle EER and minDCF for one score set."""
    eer, eer_thr = compute_eer(scores)
    min_dcf, dcf_thr = compute_min_dcf(scores, cfg)
    return EvalReport(eer=eer, eer_threshold=eer_thr, min_dcf=min_dcf, dcf_threshold=dcf_thr)


def pool_score_sets(sets) -> ScoreSet:
    """Concatenate several score sets into one pooled set."""
    sets = list(sets)
    if not sets:
        raise ValueError("no score sets to pool")
    return ScoreSet(
        target=np.concatenate([s.target for s in sets]),
        nontarget=np.concatenate([s.nontarget for s in sets]),
    )


# ---------------------------------------------------------------------------
# Trial lists.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trial:
    enroll_id: str
    test_id: str
    is_target: bool


def read_trial_list(path) -> list[Trial]:
    """Parse a trial file with one ``label enroll_id test_id`` line per trial.

    The label is 1 for target trials and 0 for nontarget trials. Blank
    lines are ignored.
    """
    trials: list[Trial] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] not in ("0", "1"):
                raise ValueError(
                    f"{path}:{lineno}: expected 'label enroll_id test_id' with label 0/1, "
                    f"got {line!r}"
                )
            trials.append(Trial(enroll_id=parts[1], test_id=parts[2], is_target=parts[0] == "1"))
    if not trials:
        raise ValueError(f"{path}: empty trial list")
    if not any(t.is_target for t in trials) or not any(not t.is_target for t in trials):
        raise ValueError(f"{path}: trial list needs at least one target and one nontarget")
    return trials


def score_trials(trials, embeddings) -> ScoreSet:
    """Cosine-score a trial list against a mapping of utterance embeddings.

    Raises
    ------
    TrialResolutionError
        Listing every referenced id with no embedding.
    """
    missing = sorted(
        {t.enroll_id for t in trials if t.enroll_id not in embeddings}
        | {t.test_id for t in trials if t.test_id not in embeddings}
    )
    if missing:
        raise TrialResolutionError(
            f"{len(missing)} utterance id(s) missing embeddings: {', '.join(missing)}"
        )
    target = []
    nontarget = []
    for t in trials:
        score = cosine_score(embeddings[t.enroll_id], embeddings[t.test_id])
        (target if t.is_target else nontarget).append(score)
    return ScoreSet(target=np.array(target), nontarget=np.array(nontarget))
