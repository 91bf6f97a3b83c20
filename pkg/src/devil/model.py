"""Domain types shared by the whole pipeline.

All types are immutable value objects once constructed: arrays are stored
with the writeable flag cleared, so instances can be shared freely between
worker processes and threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import InconsistencyError, TooFewFramesError, ValidationError

#: BT.601 luma weights, the single grayscale definition used everywhere.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

MIN_FRAME_SIDE = 16


def luma(frame: np.ndarray) -> np.ndarray:
    """Convert an HxWx3 uint8 RGB raster to uint8 luma.

    Uses round-half-up on the BT.601 weighted sum, so (255,255,255) maps to
    255 and (0,0,0) to 0 exactly.
    """
    frame = np.asarray(frame)
    if frame.ndim == 2:
        return frame.astype(np.uint8)
    r, g, b = LUMA_WEIGHTS
    y = r * frame[..., 0].astype(np.float64) + g * frame[..., 1] + b * frame[..., 2]
    return np.floor(y + 0.5).astype(np.uint8)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


class FrameSequence:
    """A decoded video: N ordered HxWx3 uint8 RGB frames."""

    def __init__(self, frames: np.ndarray):
        frames = np.asarray(frames)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise ValidationError(f"expected frames shaped (N, H, W, 3), got {frames.shape}")
        if frames.dtype != np.uint8:
            raise ValidationError(f"frames must be uint8, got {frames.dtype}")
        n, h, w, _ = frames.shape
        if n < 2:
            raise TooFewFramesError(f"need at least 2 frames, got {n}")
        if h < MIN_FRAME_SIDE or w < MIN_FRAME_SIDE:
            raise ValidationError(f"frame size {w}x{h} below minimum {MIN_FRAME_SIDE}")
        self._frames = _freeze(frames)
        self._lumas: Optional[np.ndarray] = None

    @property
    def frames(self) -> np.ndarray:
        return self._frames

    @property
    def frame_count(self) -> int:
        return self._frames.shape[0]

    @property
    def height(self) -> int:
        return self._frames.shape[1]

    @property
    def width(self) -> int:
        return self._frames.shape[2]

    def lumas(self) -> np.ndarray:
        """uint8 luma planes, shape (N, H, W); computed once and cached."""
        if self._lumas is None:
            self._lumas = _freeze(luma(self._frames))
        return self._lumas

    def __len__(self) -> int:
        return self.frame_count

    def __eq__(self, other) -> bool:
        return isinstance(other, FrameSequence) and np.array_equal(self._frames, other._frames)

    def __repr__(self) -> str:
        return f"FrameSequence(n={self.frame_count}, size={self.width}x{self.height})"


_SECTION_RANKS = {
    "frame_embeddings": 2,
    "patch_maps": 4,
    "segment_embeddings": 2,
    "flow_fields": 4,
}


@dataclass(frozen=True)
class EmbeddingBundle:
    """Optional per-video feature tensors.

    frame_embeddings   (N, C)          one global vector per frame
    patch_maps         (N, H', W', C') one vector per frame and grid cell
    segment_embeddings (n_seg, C'')    one vector per temporal segment
    flow_fields        (N-1, H, W, 2)  dense (dx, dy) flow per frame pair
    """

    frame_embeddings: Optional[np.ndarray] = None
    patch_maps: Optional[np.ndarray] = None
    segment_embeddings: Optional[np.ndarray] = None
    flow_fields: Optional[np.ndarray] = None

    def __post_init__(self):
        for name, rank in _SECTION_RANKS.items():
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=np.float32)
            if arr.ndim != rank:
                raise InconsistencyError(f"{name} must have rank {rank}, got {arr.ndim}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains NaN or Inf")
            if arr.shape[-1] < 1 or 0 in arr.shape:
                raise ValidationError(f"{name} has an empty dimension: {arr.shape}")
            object.__setattr__(self, name, _freeze(arr))
        if self.flow_fields is not None and self.flow_fields.shape[-1] != 2:
            raise InconsistencyError(
                f"flow_fields last dimension must be 2, got {self.flow_fields.shape[-1]}"
            )
        self._check_frame_counts()

    def _check_frame_counts(self):
        counts = {}
        if self.frame_embeddings is not None:
            counts["frame_embeddings"] = self.frame_embeddings.shape[0]
        if self.patch_maps is not None:
            counts["patch_maps"] = self.patch_maps.shape[0]
        if self.flow_fields is not None:
            counts["flow_fields"] = self.flow_fields.shape[0] + 1
        if len(set(counts.values())) > 1:
            detail = ", ".join(f"{k} implies N={v}" for k, v in counts.items())
            raise InconsistencyError(f"sections disagree on the frame count: {detail}")

    def implied_frame_count(self) -> Optional[int]:
        if self.frame_embeddings is not None:
            return int(self.frame_embeddings.shape[0])
        if self.patch_maps is not None:
            return int(self.patch_maps.shape[0])
        if self.flow_fields is not None:
            return int(self.flow_fields.shape[0]) + 1
        return None

    def check_against(self, n_frames: int) -> None:
        """Raise if any frame-indexed section disagrees with the video length."""
        implied = self.implied_frame_count()
        if implied is not None and implied != n_frames:
            raise InconsistencyError(
                f"feature sections imply N={implied} but the video has N={n_frames}"
            )

    def is_empty(self) -> bool:
        return all(getattr(self, f.name) is None for f in fields(self))

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingBundle):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return True


def _check_grade(value: int, what: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    if not 1 <= value <= 5:
        raise ValidationError(f"{what} must be in 1..5, got {value}")
    return int(value)


@dataclass(frozen=True)
class BenchmarkEntry:
    """One prompt of the grade-labeled benchmark."""

    id: str
    prompt: str
    grade: int

    def __post_init__(self):
        _check_grade(self.grade, "grade")


QUALITY_METRICS = (
    "naturalness",
    "motion_smoothness",
    "subject_consistency",
    "background_consistency",
)


@dataclass(frozen=True)
class QualityRecord:
    """Per-video external quality numbers, each optional, each in [0,1]."""

    video_id: str
    naturalness: Optional[float] = None
    motion_smoothness: Optional[float] = None
    subject_consistency: Optional[float] = None
    background_consistency: Optional[float] = None

    def __post_init__(self):
        for name in QUALITY_METRICS:
            v = getattr(self, name)
            if v is None:
                continue
            v = float(v)
            if not np.isfinite(v) or not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0,1], got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class RatingsRecord:
    """Human grades for one video at the three temporal levels plus naturalness."""

    video_id: str
    frame_grade: int
    segment_grade: int
    video_grade: int
    naturalness_grade: int

    def __post_init__(self):
        for name in ("frame_grade", "segment_grade", "video_grade", "naturalness_grade"):
            _check_grade(getattr(self, name), name)


RAW_SCORE_NAMES = ("s_ofs", "s_sd", "s_pd", "s_pa", "s_ga", "s_te", "s_tsd")


@dataclass(frozen=True)
class DynamicsScoreSet:
    """The seven raw dynamics scores for one video, plus the aligned
    per-granularity scores and the overall score once alignment has run."""

    s_ofs: float
    s_sd: float
    s_pd: float
    s_pa: float
    s_ga: float
    s_te: float
    s_tsd: float
    s_f: Optional[float] = None
    s_s: Optional[float] = None
    s_v: Optional[float] = None
    overall: Optional[float] = None

    def __post_init__(self):
        for name in RAW_SCORE_NAMES:
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        for name in ("s_f", "s_s", "s_v", "overall"):
            v = getattr(self, name)
            if v is None:
                continue
            v = float(v)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must lie in [0,1], got {v}")
            object.__setattr__(self, name, v)

    def raw(self) -> dict:
        return {name: getattr(self, name) for name in RAW_SCORE_NAMES}


@dataclass
class EvaluationReport:
    """Everything one evaluation run produces, in report-file layout."""

    per_video: dict = field(default_factory=dict)
    model_metrics: dict = field(default_factory=dict)
    correlations: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_video": self.per_video,
            "model_metrics": self.model_metrics,
            "correlations": self.correlations,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluationReport":
        missing = {"per_video", "model_metrics", "correlations", "config"} - set(data)
        if missing:
            raise ValidationError(f"report is missing sections: {sorted(missing)}")
        return cls(
            per_video=data["per_video"],
            model_metrics=data["model_metrics"],
            correlations=data["correlations"],
            config=data["config"],
        )
