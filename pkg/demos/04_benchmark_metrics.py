"""Model-level metrics over a graded benchmark: dynamics range,
controllability, dynamics-based quality with low/mid/high splits.

Uses hand-built overall scores so the arithmetic is easy to follow.

Run: python demos/04_benchmark_metrics.py
"""

import numpy as np

from devil.metrics import (
    dynamics_based_quality,
    dynamics_controllability,
    dynamics_range,
    quality_at_levels,
)

rng = np.random.default_rng(0)

# A well-behaved model: scores rise with the prompt grade and span most of
# the range; quality gently declines as dynamics grow.
grades = np.repeat([1, 2, 3, 4, 5], 20)
scores = np.clip((grades - 1) / 5.0 + rng.uniform(0.0, 0.18, grades.size), 0, 1)
quality = np.clip(1.0 - 0.55 * scores + rng.normal(0, 0.03, grades.size), 0, 1)

print("well-behaved model:")
print(f"  dynamics range          {dynamics_range(scores) * 100:5.1f}%")
print(f"  dynamics controllability{dynamics_controllability(grades, scores) * 100:6.1f}%")
print(f"  dynamics-based quality  {dynamics_based_quality(scores, quality) * 100:5.1f}%")
low, mid, high = quality_at_levels(scores, quality)
print(f"  quality at levels       low {low*100:.1f}%  mid {mid*100:.1f}%  high {high*100:.1f}%")

# A "cheating" model: ignores the prompt and always renders near-static
# video, harvesting high per-video quality scores.
cheat_scores = rng.uniform(0.02, 0.15, grades.size)
cheat_quality = np.clip(0.95 - 0.2 * cheat_scores + rng.normal(0, 0.02, grades.size), 0, 1)

print()
print("low-dynamics 'cheating' model:")
print(f"  mean per-video quality  {cheat_quality.mean() * 100:5.1f}%  <- looks great")
print(f"  dynamics range          {dynamics_range(cheat_scores) * 100:5.1f}%")
print(f"  dynamics controllability{dynamics_controllability(grades, cheat_scores) * 100:6.1f}%")
print(f"  dynamics-based quality  {dynamics_based_quality(cheat_scores, cheat_quality) * 100:5.1f}%")
low, mid, high = quality_at_levels(cheat_scores, cheat_quality)
print(f"  quality at levels       low {low*100:.1f}%  mid {mid*100:.1f}%  high {high*100:.1f}%")
print()
print("binning the quality by dynamics exposes the empty mid/high intervals")
print("that plain averaging hides.")
