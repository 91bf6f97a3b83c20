"""Video dynamics scoring and benchmark evaluation toolkit.

Computes per-video dynamics scores at three temporal granularities
(inter-frame, inter-segment, video level), fits a human-alignment regression
producing an overall dynamics score in [0,1], and aggregates model-level
metrics (dynamics range, controllability, dynamics-based quality,
naturalness) over a grade-labeled prompt benchmark.
"""

from .alignment import (
    AlignmentModel,
    LinearModel,
    apply_model,
    fit_granularity_model,
    load_alignment_model,
    overall_dynamics_score,
    save_alignment_model,
    split_train_test,
)
from .errors import (
    DevilError,
    FormatError,
    InconsistencyError,
    MissingInputError,
    ParseError,
    TooFewFramesError,
    ToolError,
    UnderdeterminedError,
    UndefinedMetricError,
    UndefinedSimilarityError,
    ValidationError,
)
from .frame import (
    PerceptualHash,
    estimate_flow,
    optical_flow_strength,
    perceptual_dynamics,
    phash,
    ssim,
    structural_dynamics,
)
from .io import (
    load_benchmark,
    load_embeddings,
    load_frames,
    load_quality,
    load_ratings,
    read_report,
    save_embeddings,
    save_frames,
    write_report,
)
from .metrics import (
    aggregate_naturalness,
    composite_quality,
    dynamics_based_quality,
    dynamics_controllability,
    dynamics_range,
    kendall,
    naturalness_level_to_score,
    pearson,
    percentile,
    quality_at_levels,
    win_ratio,
)
from .model import (
    BenchmarkEntry,
    DynamicsScoreSet,
    EmbeddingBundle,
    EvaluationReport,
    FrameSequence,
    QualityRecord,
    RatingsRecord,
    luma,
)
from .scoring import score_video
from .synth import SynthSpec, build_corpus, generate, generate_features
from .temporal import (
    acf,
    global_aperiodicity,
    patch_aperiodicity,
    temporal_entropy,
    temporal_semantic_diversity,
)

__version__ = "0.1.0"
