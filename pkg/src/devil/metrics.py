"""Model-level metrics over a graded benchmark: dynamics range,
controllability, dynamics-based quality with level splits, naturalness
aggregation, and the correlation statistics used for human-alignment checks.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import MissingInputError, ParseError, UndefinedMetricError, ValidationError
from .model import QUALITY_METRICS, QualityRecord

QUALITY_INTERVALS = 12

#: Level split boundaries on the overall score; a boundary value belongs to
#: the lower level.
LEVEL_SPLITS = ((0.0, 0.333), (0.333, 0.667), (0.667, 1.0))


def percentile(scores: Sequence[float], p: float) -> float:
    """Linear-interpolation percentile at rank p*(n-1)."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValidationError("percentile of an empty vector is undefined")
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0,1], got {p}")
    ordered = np.sort(scores)
    rank = p * (ordered.size - 1)
    lo = int(np.floor(rank))
    frac = rank - lo
    if frac == 0.0 or lo + 1 >= ordered.size:
        return float(ordered[lo])
    return float(ordered[lo] + frac * (ordered[lo + 1] - ordered[lo]))


def dynamics_range(scores: Sequence[float]) -> float:
    """Spread between the 99th and 1st percentile of the overall scores."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size < 2:
        raise ValidationError(f"need at least 2 scores, got {scores.size}")
    return percentile(scores, 0.99) - percentile(scores, 0.01)


def dynamics_controllability(grades: Sequence[int], scores: Sequence[float]) -> float:
    """Fraction of cross-grade prompt pairs whose score ordering matches
    their grade ordering, averaged per prompt.

    Score ties against a different grade count as misordered (contribute 0).
    """
    grades = np.asarray(grades, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    m = grades.size
    if m < 2 or scores.size != m:
        raise ValidationError("need matching grade/score vectors of length >= 2")
    if np.all(grades == grades[0]):
        raise UndefinedMetricError("all grades identical; controllability is undefined")
    grade_diff = grades[:, None] - grades[None, :]
    score_diff = scores[:, None] - scores[None, :]
    cross = grade_diff != 0
    consistent = (grade_diff * score_diff > 0) & cross
    same_counts = (~cross).sum(axis=1)  # includes self
    fractions = consistent.sum(axis=1) / (m - same_counts)
    return float(np.sum(fractions) / m)


def composite_quality(
    record: QualityRecord, required: Sequence[str] = QUALITY_METRICS
) -> float:
    """Mean of the required quality metrics of one video."""
    values = []
    for name in required:
        if name not in QUALITY_METRICS:
            raise ValidationError(f"unknown quality metric {name!r}")
        value = getattr(record, name)
        if value is None:
            raise MissingInputError(f"{record.video_id}: quality metric {name!r} is missing")
        values.append(value)
    if not values:
        raise ValidationError("required metric set is empty")
    return float(np.mean(values))


def _bin_index(score: float, lo: float, hi: float, n_bins: int) -> int:
    idx = int((score - lo) * n_bins / (hi - lo))
    return min(idx, n_bins - 1)


def dynamics_based_quality(
    scores: Sequence[float],
    qualities: Sequence[float],
    n_bins: int = QUALITY_INTERVALS,
    lo: float = 0.0,
    hi: float = 1.0,
) -> float:
    """Mean over equal score intervals of the per-interval mean composite
    quality; empty intervals contribute 0. Returns 0 for an empty corpus."""
    scores = np.asarray(scores, dtype=np.float64)
    qualities = np.asarray(qualities, dtype=np.float64)
    if scores.shape != qualities.shape:
        raise ValidationError("scores and qualities must have equal length")
    if n_bins < 1 or hi <= lo:
        raise ValidationError("need n_bins >= 1 and hi > lo")
    if scores.size and (scores.min() < lo or scores.max() > hi):
        raise ValidationError(f"scores must lie within [{lo}, {hi}]")
    bin_means = np.zeros(n_bins)
    if scores.size:
        indices = np.array([_bin_index(s, lo, hi, n_bins) for s in scores])
        for b in range(n_bins):
            members = qualities[indices == b]
            if members.size:
                bin_means[b] = members.mean()
    return float(bin_means.mean())


def quality_at_levels(
    scores: Sequence[float],
    qualities: Sequence[float],
    n_bins: int = QUALITY_INTERVALS,
) -> tuple[float, float, float]:
    """Dynamics-based quality restricted to the low/medium/high score levels,
    with n_bins/3 intervals per level."""
    scores = np.asarray(scores, dtype=np.float64)
    qualities = np.asarray(qualities, dtype=np.float64)
    per_level = n_bins // 3
    results = []
    for i, (lo, hi) in enumerate(LEVEL_SPLITS):
        if i == 0:
            mask = scores <= hi
        else:
            mask = (scores > lo) & (scores <= hi)
        results.append(
            dynamics_based_quality(scores[mask], qualities[mask], per_level, lo, hi)
        )
    return tuple(results)


NATURALNESS_LEVELS = (
    "Almost Real",
    "Slightly Unrealistic",
    "Moderately Unrealistic",
    "Noticeably Unrealistic",
    "Completely Fictitious",
)
_LEVEL_SCORES = {
    name.lower(): score
    for name, score in zip(NATURALNESS_LEVELS, (1.0, 0.75, 0.5, 0.25, 0.0))
}


def naturalness_level_to_score(level: str) -> float:
    """Map one of the five naturalness level names to its [0,1] score."""
    try:
        return _LEVEL_SCORES[level.strip().lower()]
    except KeyError:
        raise ParseError(f"unknown naturalness level {level!r}") from None


def aggregate_naturalness(levels: Sequence[str]) -> float:
    """Mean naturalness score over videos."""
    if not levels:
        raise ValidationError("no naturalness levels to aggregate")
    return float(np.mean([naturalness_level_to_score(level) for level in levels]))


# ---------------------------------------------------------------------------
# correlation statistics
# ---------------------------------------------------------------------------

def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("need two equal-length 1-D vectors")
    if x.size < 2:
        raise ValidationError(f"need at least 2 samples, got {x.size}")
    return x, y


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Standard sample Pearson correlation."""
    x, y = _check_pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    ssx = float(dx @ dx)
    ssy = float(dy @ dy)
    if ssx == 0.0 or ssy == 0.0:
        raise UndefinedMetricError("pearson is undefined for zero-variance input")
    return float((dx @ dy) / np.sqrt(ssx * ssy))


def kendall(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall's tau-b (tie-corrected)."""
    x, y = _check_pair(x, y)
    tau = stats.kendalltau(x, y, variant="b").statistic
    if not np.isfinite(tau):
        raise UndefinedMetricError("kendall tau-b is undefined for this input")
    return float(tau)


def win_ratio(predicted: Sequence[float], human: Sequence[int]) -> float:
    """Fraction of ordered cross-grade pairs whose predicted ordering matches
    the human grade ordering; prediction ties count as losses."""
    predicted = np.asarray(predicted, dtype=np.float64)
    human = np.asarray(human, dtype=np.float64)
    if predicted.shape != human.shape or predicted.size < 2:
        raise ValidationError("need matching vectors of length >= 2")
    human_diff = human[:, None] - human[None, :]
    pred_diff = predicted[:, None] - predicted[None, :]
    cross = human_diff != 0
    total = int(cross.sum())
    if total == 0:
        raise UndefinedMetricError("all human grades identical; win ratio is undefined")
    wins = int(((human_diff * pred_diff > 0) & cross).sum())
    return wins / total


def correlation_summary(
    predicted: Sequence[float], grades: Sequence[int]
) -> dict[str, Optional[float]]:
    """Pearson, Kendall and win ratio in one dict; undefined values are None."""
    out: dict[str, Optional[float]] = {}
    for name, fn in (("pearson", pearson), ("kendall", kendall), ("win_ratio", win_ratio)):
        try:
            out[name] = fn(predicted, grades)
        except (UndefinedMetricError, ValidationError):
            out[name] = None
    return out
