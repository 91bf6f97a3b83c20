"""Score a single synthetic clip and walk through the seven raw dynamics
scores one at a time.

Run: python demos/01_score_one_video.py
"""

from devil.frame import optical_flow_strength, perceptual_dynamics, structural_dynamics
from devil.scoring import score_video
from devil.synth import SynthSpec, generate, generate_features
from devil.temporal import patch_aperiodicity, temporal_entropy, temporal_semantic_diversity

# A checkerboard sliding 2 px per frame: moderate, perfectly regular motion.
spec = SynthSpec(kind="translate", n=16, height=64, width=64, speed=2)
video = generate(spec)
features = generate_features(spec)

print(f"video: {video.frame_count} frames at {video.width}x{video.height}")
print()
print("inter-frame scores (computed from pixels alone):")
print(f"  optical flow strength  {optical_flow_strength(video):8.4f} px/frame")
print(f"  structural dynamics    {structural_dynamics(video):8.4f}")
print(f"  perceptual dynamics    {perceptual_dynamics(video):8.4f}")
print()
print("inter-segment and video-level scores (need feature tensors):")
print(f"  patch aperiodicity     {patch_aperiodicity(features.patch_maps):8.4f}")
print(f"  temporal entropy       {temporal_entropy(video):8.4f} bpp")
print(f"  semantic diversity     {temporal_semantic_diversity(features.frame_embeddings):8.4f}")
print()

# score_video bundles all seven, falling back to luma-derived features for
# any section the bundle lacks, and records what fed each score.
scores, sources = score_video(video, features)
print("score_video() in one call:")
for name, value in scores.raw().items():
    print(f"  {name:6s} {value:10.4f}")
print("sources:", sources)
