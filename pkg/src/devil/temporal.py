"""Inter-segment and video-level dynamics scores.

The auto-correlation factor averages, over every lag from 1 to N-K0, the mean
cosine similarity between the series and its lagged self. K0 = floor(N/8)
comes from the shortest overlap window allowed to contribute; the lag-0 term
is excluded so a constant series scores exactly 1.
"""

from __future__ import annotations

import bz2
import shlex
import subprocess
import tempfile
from pathlib import Path

import numpy as np

from .errors import (
    InconsistencyError,
    MissingInputError,
    ToolError,
    UndefinedSimilarityError,
    ValidationError,
)
from .frame import resize_bilinear
from .model import FrameSequence

SEGMENT_RATIO = 0.25
PATCH_GRID = 8
FRAME_EMBED_SIZE = 16
MIN_PATCH_FRAMES = 9


def _unit_rows(series: np.ndarray, what: str) -> np.ndarray:
    series = np.asarray(series, dtype=np.float64)
    norms = np.linalg.norm(series, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise UndefinedSimilarityError(f"{what} contains a zero vector")
    return series / norms


def acf(series: np.ndarray, k0: int | None = None) -> float:
    """Auto-correlation factor of one feature series, shape (N, C).

    Result lies in [-1, 1]; 1 for a constant non-zero series.
    """
    series = np.asarray(series, dtype=np.float64)
    n = series.shape[0]
    if k0 is None:
        k0 = n // 8
    if k0 < 1:
        raise ValidationError(f"series of length {n} gives K0={k0}; need K0 >= 1")
    if n < k0 + 1:
        raise ValidationError(f"series length {n} must exceed K0={k0}")
    unit = _unit_rows(series, "series")
    total = 0.0
    for k in range(k0, n):
        sims = np.clip(np.einsum("ij,ij->i", unit[:k], unit[n - k :]), -1.0, 1.0)
        # rounding can leave the dot of a vector with its own copy just off 1;
        # force bitwise-equal pairs to similarity 1 so constant series score
        # exactly 1
        sims[np.all(series[:k] == series[n - k :], axis=1)] = 1.0
        total += sims.sum() / k
    return total / (n - k0)


def _acf_batch(series: np.ndarray, k0: int) -> np.ndarray:
    """acf over a batch of series, shape (P, N, C) -> (P,)."""
    n = series.shape[1]
    unit = _unit_rows(series, "patch series")
    totals = np.zeros(series.shape[0])
    for k in range(k0, n):
        sims = np.clip(
            np.einsum("pij,pij->pi", unit[:, :k], unit[:, n - k :]), -1.0, 1.0
        )
        sims[np.all(series[:, :k] == series[:, n - k :], axis=2)] = 1.0
        totals += sims.sum(axis=1) / k
    return totals / (n - k0)


def patch_aperiodicity(patch_maps: np.ndarray | None) -> float:
    """1 minus the mean auto-correlation factor over all grid positions of an
    (N, H', W', C') patch-feature tensor."""
    if patch_maps is None:
        raise MissingInputError("patch_maps are required for patch aperiodicity")
    patch_maps = np.asarray(patch_maps, dtype=np.float64)
    n, gh, gw, c = patch_maps.shape
    if n < MIN_PATCH_FRAMES:
        raise ValidationError(f"patch aperiodicity needs at least {MIN_PATCH_FRAMES} frames, got {n}")
    series = patch_maps.reshape(n, gh * gw, c).transpose(1, 0, 2)
    return 1.0 - float(_acf_batch(series, n // 8).mean())


def global_aperiodicity(segment_embeddings: np.ndarray | None) -> float:
    """1 minus the mean cosine similarity over all ordered pairs of distinct
    segment embeddings; 0 for identical segments, 1 for orthogonal ones."""
    if segment_embeddings is None:
        raise MissingInputError("segment_embeddings are required for global aperiodicity")
    segments = np.asarray(segment_embeddings, dtype=np.float64)
    s = segments.shape[0]
    if s < 2:
        raise ValidationError(f"need at least 2 segments, got {s}")
    unit = _unit_rows(segments, "segment embeddings")
    gram = np.clip(unit @ unit.T, -1.0, 1.0)
    gram[np.all(segments[:, None, :] == segments[None, :, :], axis=2)] = 1.0
    pair_sum = gram.sum() - float(np.trace(gram))
    return 1.0 - float(pair_sum / (s * (s - 1)))


def split_segments(n_frames: int, ratio: float = SEGMENT_RATIO) -> list[range]:
    """Consecutive non-overlapping segments: floor(1/ratio) segments of
    floor(ratio*N) frames; trailing frames are dropped."""
    length = int(ratio * n_frames)
    count = int(1.0 / ratio)
    if length < 1:
        raise ValidationError(f"{n_frames} frames is too short for segment ratio {ratio}")
    return [range(i * length, (i + 1) * length) for i in range(count)]


def temporal_semantic_diversity(frame_embeddings: np.ndarray | None) -> float:
    """Mean squared deviation of per-frame embeddings from their mean."""
    if frame_embeddings is None:
        raise MissingInputError("frame_embeddings are required for semantic diversity")
    emb = np.asarray(frame_embeddings, dtype=np.float64)
    centered = emb - emb.mean(axis=0)
    return float(np.einsum("ij,ij->i", centered, centered).mean())


# ---------------------------------------------------------------------------
# temporal entropy
# ---------------------------------------------------------------------------

ENTROPY_COMPRESS_LEVEL = 9


def temporal_entropy_builtin(seq: FrameSequence) -> float:
    """Bits-per-pixel proxy: concatenated luma residuals (mod 256) of
    consecutive frames, bz2-compressed at a fixed level."""
    lumas = seq.lumas()
    residuals = (lumas[1:] - lumas[:-1]).tobytes()  # uint8 arithmetic wraps mod 256
    compressed = bz2.compress(residuals, ENTROPY_COMPRESS_LEVEL)
    denom = (seq.frame_count - 1) * seq.height * seq.width
    return 8.0 * len(compressed) / denom


def render_encoder_command(template: str, **values: object) -> list[str]:
    """Fill the {input}/{output}/{width}/{height}/{nframes} placeholders of a
    pinned encoder command template and split it for execution."""
    try:
        rendered = template.format(**values)
    except KeyError as exc:
        raise ValidationError(f"unknown placeholder {exc} in encoder command") from exc
    return shlex.split(rendered)


def _run_encoder(template: str, frames: np.ndarray, workdir: Path) -> int:
    n, h, w, _ = frames.shape
    input_path = workdir / f"input_{n}.rgb"
    output_path = workdir / f"output_{n}.bin"
    input_path.write_bytes(frames.tobytes())
    argv = render_encoder_command(
        template,
        input=str(input_path),
        output=str(output_path),
        width=w,
        height=h,
        nframes=n,
    )
    try:
        proc = subprocess.run(argv, capture_output=True, text=True)
    except FileNotFoundError as exc:
        raise ToolError(f"encoder executable not found: {argv[0]}") from exc
    if proc.returncode != 0:
        raise ToolError(
            f"encoder exited with {proc.returncode}\nstdout: {proc.stdout}\nstderr: {proc.stderr}"
        )
    if not output_path.exists():
        raise ToolError(f"encoder produced no output file {output_path}")
    return output_path.stat().st_size


def temporal_entropy_external(seq: FrameSequence, encoder_command: str) -> float:
    """Bits-per-pixel proxy from an external encoder.

    The pinned command template is run twice, on the full clip and on the
    first frame alone; the size difference is the bit cost of frames 2..N.
    """
    with tempfile.TemporaryDirectory(prefix="devil-entropy-") as tmp:
        workdir = Path(tmp)
        size_full = _run_encoder(encoder_command, seq.frames, workdir)
        size_first = _run_encoder(encoder_command, seq.frames[:1], workdir)
    denom = (seq.frame_count - 1) * seq.height * seq.width
    return 8.0 * max(size_full - size_first, 0) / denom


def temporal_entropy(
    seq: FrameSequence, mode: str = "builtin", encoder_command: str | None = None
) -> float:
    if mode == "builtin":
        return temporal_entropy_builtin(seq)
    if mode == "external":
        if not encoder_command:
            raise ValidationError("external entropy mode requires an encoder command")
        return temporal_entropy_external(seq, encoder_command)
    raise ValidationError(f"unknown temporal entropy mode {mode!r}")


# ---------------------------------------------------------------------------
# luma fallback features (used when a DEVB file has no learned features)
# ---------------------------------------------------------------------------

def luma_patch_grid(seq: FrameSequence, grid: int = PATCH_GRID) -> np.ndarray:
    """Raw-luma patch features: each grid cell's pixels, offset by +1 so
    cosine similarity stays defined on all-black cells. (N, grid, grid, C')."""
    lumas = seq.lumas().astype(np.float64) + 1.0
    rows = np.array_split(np.arange(seq.height), grid)
    cols = np.array_split(np.arange(seq.width), grid)
    cell_c = min(len(r) for r in rows) * min(len(c) for c in cols)
    out = np.empty((seq.frame_count, grid, grid, cell_c))
    for gy, r in enumerate(rows):
        for gx, c in enumerate(cols):
            cell = lumas[:, r[:, None], c[None, :]].reshape(seq.frame_count, -1)
            out[:, gy, gx, :] = cell[:, :cell_c]
    return out


def luma_frame_embeddings(seq: FrameSequence, size: int = FRAME_EMBED_SIZE) -> np.ndarray:
    """Per-frame global features: luma resampled to size x size, flattened,
    offset by +1. (N, size*size)."""
    lumas = seq.lumas().astype(np.float64)
    return np.stack(
        [resize_bilinear(frame, size, size).ravel() + 1.0 for frame in lumas]
    )


def luma_segment_embeddings(seq: FrameSequence, ratio: float = SEGMENT_RATIO) -> np.ndarray:
    """Per-segment features: mean of the frame features over each segment."""
    frame_features = luma_frame_embeddings(seq)
    segments = split_segments(seq.frame_count, ratio)
    return np.stack([frame_features[list(seg)].mean(axis=0) for seg in segments])


def check_flow_shape(flow_fields: np.ndarray, seq: FrameSequence) -> np.ndarray:
    expected = (seq.frame_count - 1, seq.height, seq.width, 2)
    flow_fields = np.asarray(flow_fields)
    if flow_fields.shape != expected:
        raise InconsistencyError(
            f"flow_fields shape {flow_fields.shape} does not match {expected}"
        )
    return flow_fields
