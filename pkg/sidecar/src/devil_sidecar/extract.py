"""Feature extraction: frames in, DEVB out.

Mock mode skips the backbones entirely and emits tensors that are a pure
function of (seed, N, H, W), byte-identical across runs and machines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import backbones
from .formats import FormatError, SidecarError, read_frames, write_devb

MAX_PATCH_GRID = 16

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix_floats(seed: int, count: int) -> np.ndarray:
    counters = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + counters * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass
class ExtractorConfig:
    input_path: str
    output_path: str
    image_backbone: str = "grid"
    segment_backbone: str = "pooled"
    flow_backbone: str = "farneback"
    segment_ratio: float = 0.25
    patch_grid: int = MAX_PATCH_GRID
    device: str = "cpu"
    mock: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.segment_ratio <= 0.5:
            raise SidecarError(f"segment ratio must be in (0, 0.5], got {self.segment_ratio}")
        if not 1 <= self.patch_grid <= MAX_PATCH_GRID:
            raise SidecarError(f"patch grid must be in 1..{MAX_PATCH_GRID}, got {self.patch_grid}")
        out_dir = Path(self.output_path).parent
        if not out_dir.is_dir():
            raise SidecarError(f"output directory {out_dir} does not exist")


def _segments(n_frames: int, ratio: float) -> list[range]:
    length = int(ratio * n_frames)
    count = int(1.0 / ratio)
    if length < 1:
        raise SidecarError(f"{n_frames} frames too short for segment ratio {ratio}")
    return [range(i * length, (i + 1) * length) for i in range(count)]


def _mock_sections(seed: int, n: int, h: int, w: int, grid: int, n_seg: int) -> dict:
    c_frame, c_patch, c_seg = 32, 8, 16
    sizes = {
        "frame_embeddings": (n, c_frame),
        "patch_maps": (n, grid, grid, c_patch),
        "segment_embeddings": (n_seg, c_seg),
        "flow_fields": (n - 1, h, w, 2),
    }
    sections = {}
    for stream, (name, shape) in enumerate(sorted(sizes.items())):
        count = int(np.prod(shape))
        values = _splitmix_floats(seed * 1_000_003 + stream + 1, count) * 2.0 - 1.0
        sections[name] = values.reshape(shape)
    return sections


def _validate(sections: dict, n: int, h: int, w: int) -> None:
    checks = {
        "frame_embeddings": lambda a: a.ndim == 2 and a.shape[0] == n,
        "patch_maps": lambda a: a.ndim == 4 and a.shape[0] == n,
        "segment_embeddings": lambda a: a.ndim == 2 and a.shape[0] >= 2,
        "flow_fields": lambda a: a.shape == (n - 1, h, w, 2),
    }
    for name, check in checks.items():
        arr = sections[name]
        if not check(np.asarray(arr)):
            raise FormatError(
                f"section {name} has shape {np.asarray(arr).shape}, inconsistent with "
                f"N={n}, {w}x{h}"
            )


def extract(config: ExtractorConfig) -> Path:
    """Run the configured backbones (or mock mode) and write the DEVB file
    plus an adjacent .meta.json describing the extraction."""
    frames = read_frames(config.input_path)
    n, h, w, _ = frames.shape
    grid = min(config.patch_grid, MAX_PATCH_GRID)
    segments = _segments(n, config.segment_ratio)

    if config.mock:
        sections = _mock_sections(config.seed, n, h, w, grid, len(segments))
        used = {"image": "mock", "segment": "mock", "flow": "mock"}
    else:
        image_fn = backbones.resolve(backbones.IMAGE_BACKBONES, config.image_backbone, "image")
        segment_fn = backbones.resolve(
            backbones.SEGMENT_BACKBONES, config.segment_backbone, "segment"
        )
        flow_fn = backbones.resolve(backbones.FLOW_BACKBONES, config.flow_backbone, "flow")
        frame_embeddings, patch_maps = image_fn(frames, grid)
        sections = {
            "frame_embeddings": frame_embeddings,
            "patch_maps": patch_maps,
            "segment_embeddings": segment_fn(frame_embeddings, segments),
            "flow_fields": flow_fn(frames),
        }
        used = {
            "image": config.image_backbone,
            "segment": config.segment_backbone,
            "flow": config.flow_backbone,
        }

    _validate(sections, n, h, w)
    out_path = Path(config.output_path)
    write_devb(sections, out_path)

    meta = {
        "backbones": used,
        "mock": config.mock,
        "seed": config.seed if config.mock else None,
        "segment_ratio": config.segment_ratio,
        "segment_length": len(segments[0]),
        "segment_count": len(segments),
        "patch_grid": grid,
        "frames": {"n": n, "height": h, "width": w},
        "preprocessing": "BT.601 luma for grid/flow backbones; backbone-native transforms otherwise",
    }
    meta_path = out_path.with_suffix(out_path.suffix + ".meta.json")
    meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return out_path
