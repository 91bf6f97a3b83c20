"""Human-alignment regression: per-granularity linear models mapping raw
dynamics scores to [0,1], plus the overall dynamics score.

Grades 1..5 map to targets (g-1)/4. Inputs are min-max normalized with the
bounds observed at fit time, which travel with the model so a serialized
model is self-contained.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InconsistencyError, UnderdeterminedError, ValidationError

GRANULARITY_FEATURES = {
    "frame": ("s_ofs", "s_sd", "s_pd"),
    "segment": ("s_pa", "s_ga"),
    "video": ("s_te", "s_tsd"),
}

RIDGE_FALLBACK = 1e-8


@dataclass(frozen=True)
class LinearModel:
    """One granularity's affine map over min-max-normalized subscores."""

    granularity: str
    weights: np.ndarray
    intercept: float
    input_min: np.ndarray
    input_max: np.ndarray

    def __post_init__(self):
        for name in ("weights", "input_min", "input_max"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if not (self.weights.shape == self.input_min.shape == self.input_max.shape):
            raise ValidationError("weights and bounds must have matching shapes")
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.intercept):
            raise ValidationError("model parameters must be finite")
        if np.any(self.input_max < self.input_min):
            raise ValidationError("input_max must be >= input_min per feature")

    @property
    def feature_count(self) -> int:
        return self.weights.shape[0]

    def normalize(self, subscores: np.ndarray) -> np.ndarray:
        span = self.input_max - self.input_min
        normalized = np.zeros_like(subscores, dtype=np.float64)
        nonconstant = span > 0
        normalized[..., nonconstant] = (
            subscores[..., nonconstant] - self.input_min[nonconstant]
        ) / span[nonconstant]
        return normalized

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "weights": self.weights.tolist(),
            "intercept": self.intercept,
            "input_min": self.input_min.tolist(),
            "input_max": self.input_max.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearModel":
        return cls(
            granularity=data["granularity"],
            weights=data["weights"],
            intercept=float(data["intercept"]),
            input_min=data["input_min"],
            input_max=data["input_max"],
        )


def grade_to_target(grade) -> np.ndarray:
    grade = np.asarray(grade, dtype=np.float64)
    if np.any(grade < 1) or np.any(grade > 5):
        raise ValidationError("grades must lie in 1..5")
    return (grade - 1.0) / 4.0


def fit_granularity_model(
    subscore_rows: np.ndarray, human_grades: Sequence[int], granularity: str = "frame"
) -> LinearModel:
    """Ordinary least squares with intercept via the normal equations; falls
    back to a tiny ridge (1e-8) when they are singular."""
    x = np.asarray(subscore_rows, dtype=np.float64)
    if x.ndim != 2:
        raise ValidationError(f"subscore rows must be 2-D, got shape {x.shape}")
    n, p = x.shape
    if n < p + 1:
        raise UnderdeterminedError(
            f"{granularity}: {n} rows cannot determine {p + 1} parameters"
        )
    y = grade_to_target(human_grades)
    if y.shape != (n,):
        raise InconsistencyError(f"{n} rows but {y.shape[0]} grades")

    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    xn = np.zeros_like(x)
    nonconstant = span > 0
    xn[:, nonconstant] = (x[:, nonconstant] - lo[nonconstant]) / span[nonconstant]

    design = np.column_stack([xn, np.ones(n)])
    gram = design.T @ design
    rhs = design.T @ y
    try:
        theta = np.linalg.solve(gram, rhs)
        if not np.all(np.isfinite(theta)):
            raise np.linalg.LinAlgError("non-finite solution")
    except np.linalg.LinAlgError:
        theta = np.linalg.solve(gram + RIDGE_FALLBACK * np.eye(p + 1), rhs)
    return LinearModel(
        granularity=granularity,
        weights=theta[:p],
        intercept=float(theta[p]),
        input_min=lo,
        input_max=hi,
    )


def apply_model(model: LinearModel, subscores: Sequence[float]) -> float:
    """Aligned score in [0,1]; inputs outside the stored bounds extrapolate
    linearly before the final clamp."""
    x = np.asarray(subscores, dtype=np.float64)
    if x.shape != (model.feature_count,):
        raise InconsistencyError(
            f"expected {model.feature_count} subscores, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValidationError("subscores must be finite")
    raw = float(model.normalize(x) @ model.weights + model.intercept)
    return min(max(raw, 0.0), 1.0)


def overall_dynamics_score(s_f: float, s_s: float, s_v: float) -> float:
    """Arithmetic mean of the three aligned granularity scores."""
    for name, v in (("s_f", s_f), ("s_s", s_s), ("s_v", s_v)):
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"{name} must lie in [0,1], got {v}")
    return (s_f + s_s + s_v) / 3.0


def split_train_test(
    ids: Sequence[str], fraction: float = 0.75, seed: int = 0
) -> tuple[list[str], list[str]]:
    """Deterministic seeded split; ceil(fraction*n) ids go to train."""
    ids = list(ids)
    n = len(ids)
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"fraction must lie in (0,1), got {fraction}")
    if n < 2:
        raise ValidationError(f"need at least 2 ids, got {n}")
    order = np.random.default_rng(seed).permutation(n)
    n_train = math.ceil(fraction * n)
    train = [ids[i] for i in order[:n_train]]
    test = [ids[i] for i in order[n_train:]]
    return train, test


@dataclass(frozen=True)
class AlignmentModel:
    """The three fitted granularity models plus fit provenance."""

    frame: LinearModel
    segment: LinearModel
    video: LinearModel
    seed: int = 0
    train_rows: int = 0

    def model_for(self, granularity: str) -> LinearModel:
        if granularity not in GRANULARITY_FEATURES:
            raise ValidationError(f"unknown granularity {granularity!r}")
        return getattr(self, granularity)

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "seed": self.seed,
            "train_rows": self.train_rows,
            "models": {g: self.model_for(g).to_dict() for g in GRANULARITY_FEATURES},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AlignmentModel":
        models = data["models"]
        return cls(
            frame=LinearModel.from_dict(models["frame"]),
            segment=LinearModel.from_dict(models["segment"]),
            video=LinearModel.from_dict(models["video"]),
            seed=int(data.get("seed", 0)),
            train_rows=int(data.get("train_rows", 0)),
        )


def save_alignment_model(model: AlignmentModel, path) -> None:
    text = json.dumps(model.to_dict(), sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_alignment_model(path) -> AlignmentModel:
    return AlignmentModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def score_video_set(model: AlignmentModel, raw_scores: dict) -> dict:
    """Apply all three granularity models to one video's raw score dict and
    return s_f, s_s, s_v and the overall score."""
    aligned = {}
    for granularity, features in GRANULARITY_FEATURES.items():
        values = [raw_scores[f] for f in features]
        aligned[granularity] = apply_model(model.model_for(granularity), values)
    overall = overall_dynamics_score(aligned["frame"], aligned["segment"], aligned["video"])
    return {
        "s_f": aligned["frame"],
        "s_s": aligned["segment"],
        "s_v": aligned["video"],
        "overall": overall,
    }
