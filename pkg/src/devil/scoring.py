"""Per-video scoring: compute all seven raw dynamics scores, falling back to
luma-derived features or the built-in estimators for any DEVB section that is
absent, and record which source fed each score."""

from __future__ import annotations

from .frame import optical_flow_strength, perceptual_dynamics, structural_dynamics
from .model import DynamicsScoreSet, EmbeddingBundle, FrameSequence
from .temporal import (
    luma_frame_embeddings,
    luma_patch_grid,
    luma_segment_embeddings,
    patch_aperiodicity,
    global_aperiodicity,
    temporal_entropy,
    temporal_semantic_diversity,
)

FLOW_PRECOMPUTED = "precomputed"
FLOW_BUILTIN = "builtin"
FEATURE_DEVB = "devb"
FEATURE_FALLBACK = "luma_fallback"


def score_video(
    seq: FrameSequence,
    bundle: EmbeddingBundle | None = None,
    entropy_mode: str = "builtin",
    encoder_command: str | None = None,
) -> tuple[DynamicsScoreSet, dict[str, str]]:
    """All seven raw scores for one video plus a per-score source record."""
    if bundle is None:
        bundle = EmbeddingBundle()
    bundle.check_against(seq.frame_count)

    sources: dict[str, str] = {}

    if bundle.flow_fields is not None:
        s_ofs = optical_flow_strength(seq, bundle.flow_fields)
        sources["flow_source"] = FLOW_PRECOMPUTED
    else:
        s_ofs = optical_flow_strength(seq)
        sources["flow_source"] = FLOW_BUILTIN

    s_sd = structural_dynamics(seq)
    s_pd = perceptual_dynamics(seq)

    if bundle.patch_maps is not None:
        s_pa = patch_aperiodicity(bundle.patch_maps)
        sources["patch_source"] = FEATURE_DEVB
    else:
        s_pa = patch_aperiodicity(luma_patch_grid(seq))
        sources["patch_source"] = FEATURE_FALLBACK

    if bundle.segment_embeddings is not None:
        s_ga = global_aperiodicity(bundle.segment_embeddings)
        sources["segment_source"] = FEATURE_DEVB
    else:
        s_ga = global_aperiodicity(luma_segment_embeddings(seq))
        sources["segment_source"] = FEATURE_FALLBACK

    s_te = temporal_entropy(seq, entropy_mode, encoder_command)
    sources["entropy_mode"] = entropy_mode

    if bundle.frame_embeddings is not None:
        s_tsd = temporal_semantic_diversity(bundle.frame_embeddings)
        sources["frame_embedding_source"] = FEATURE_DEVB
    else:
        s_tsd = temporal_semantic_diversity(luma_frame_embeddings(seq))
        sources["frame_embedding_source"] = FEATURE_FALLBACK

    scores = DynamicsScoreSet(
        s_ofs=s_ofs, s_sd=s_sd, s_pd=s_pd, s_pa=s_pa, s_ga=s_ga, s_te=s_te, s_tsd=s_tsd
    )
    return scores, sources
