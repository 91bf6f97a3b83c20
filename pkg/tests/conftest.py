import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from devil.model import FrameSequence
from devil.synth import splitmix_bytes


def smooth_test_image(seed: int, height: int, width: int) -> np.ndarray:
    """A deterministic natural-looking RGB image: smoothed noise plus a ramp."""
    raw = splitmix_bytes(seed, height * width * 3).reshape(height, width, 3)
    img = raw.astype(np.float64)
    for _ in range(3):  # cheap separable box blur
        img = (np.roll(img, 1, 0) + img + np.roll(img, -1, 0)) / 3.0
        img = (np.roll(img, 1, 1) + img + np.roll(img, -1, 1)) / 3.0
    ramp = np.linspace(0, 60, width)[None, :, None]
    return np.clip(img * 0.75 + ramp, 0, 255).astype(np.uint8)


@pytest.fixture(scope="session")
def image_corpus():
    """20 deterministic pseudo-natural RGB images of varied sizes."""
    sizes = [(48, 64), (64, 64), (56, 80), (72, 48), (64, 96)]
    return [
        smooth_test_image(seed=100 + i, height=sizes[i % len(sizes)][0], width=sizes[i % len(sizes)][1])
        for i in range(20)
    ]


def frames_from_list(frames) -> FrameSequence:
    return FrameSequence(np.stack(frames).astype(np.uint8))
