"""Pluggable feature backbones.

The defaults are classical, deterministic extractors that run anywhere with
no model weights: grid statistics for image features, temporal pooling for
segment features, Farnebäck dense flow. Learned alternatives (a ViT image
backbone via torchvision, RAFT flow) are selectable by name and raise a
clean error when their weights cannot be loaded.
"""

from __future__ import annotations

import numpy as np

from .formats import SidecarError


class BackboneError(SidecarError):
    """A backbone is unknown or failed to load."""


def rgb_to_luma(frames: np.ndarray) -> np.ndarray:
    """BT.601 luma, float64, shape (N, H, W)."""
    f = frames.astype(np.float64)
    return 0.299 * f[..., 0] + 0.587 * f[..., 1] + 0.114 * f[..., 2]


def _cell_slices(size: int, cells: int) -> list[slice]:
    edges = np.linspace(0, size, cells + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


# ---------------------------------------------------------------------------
# image backbones: per-frame global embedding + patch map
# ---------------------------------------------------------------------------

def grid_image_features(frames: np.ndarray, grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Handcrafted grid statistics.

    Patch vector per cell: mean luma, luma std, mean R/G/B, horizontal and
    vertical gradient energy, and a constant bias channel that keeps every
    vector non-zero. The global embedding concatenates the per-cell mean
    lumas with the frame-wide channel means.
    """
    n, h, w, _ = frames.shape
    luma = rgb_to_luma(frames)
    rows = _cell_slices(h, grid)
    cols = _cell_slices(w, grid)

    gx = np.abs(np.diff(luma, axis=2, append=luma[:, :, -1:]))
    gy = np.abs(np.diff(luma, axis=1, append=luma[:, -1:, :]))

    patch = np.empty((n, grid, grid, 8), dtype=np.float64)
    for iy, rs in enumerate(rows):
        for ix, cs in enumerate(cols):
            cell_luma = luma[:, rs, cs]
            patch[:, iy, ix, 0] = cell_luma.mean(axis=(1, 2))
            patch[:, iy, ix, 1] = cell_luma.std(axis=(1, 2))
            patch[:, iy, ix, 2] = frames[:, rs, cs, 0].mean(axis=(1, 2))
            patch[:, iy, ix, 3] = frames[:, rs, cs, 1].mean(axis=(1, 2))
            patch[:, iy, ix, 4] = frames[:, rs, cs, 2].mean(axis=(1, 2))
            patch[:, iy, ix, 5] = gx[:, rs, cs].mean(axis=(1, 2))
            patch[:, iy, ix, 6] = gy[:, rs, cs].mean(axis=(1, 2))
            patch[:, iy, ix, 7] = 1.0
    channel_means = frames.reshape(n, -1, 3).mean(axis=1)
    embeddings = np.concatenate([patch[..., 0].reshape(n, -1), channel_means], axis=1)
    return embeddings, patch


def vit_image_features(frames: np.ndarray, grid: int) -> tuple[np.ndarray, np.ndarray]:
    """torchvision ViT-B/16: CLS token as the frame embedding, patch tokens
    pooled onto the requested grid. Needs downloadable weights."""
    try:
        import torch
        from torchvision.models import ViT_B_16_Weights, vit_b_16
    except ImportError as exc:
        raise BackboneError(f"torch/torchvision unavailable: {exc}") from exc
    try:
        weights = ViT_B_16_Weights.DEFAULT
        model = vit_b_16(weights=weights).eval()
    except Exception as exc:
        raise BackboneError(f"could not load ViT weights: {exc}") from exc

    preprocess = weights.transforms()
    patches_side = 14  # 224 / 16
    embeddings, patches = [], []
    with torch.no_grad():
        for frame in frames:
            tensor = preprocess(torch.from_numpy(frame).permute(2, 0, 1)).unsqueeze(0)
            feats = model._process_input(tensor)
            cls = model.class_token.expand(1, -1, -1)
            tokens = model.encoder(torch.cat([cls, feats], dim=1))
            embeddings.append(tokens[0, 0].numpy())
            patch_tokens = tokens[0, 1:].reshape(patches_side, patches_side, -1).numpy()
            patches.append(_pool_grid(patch_tokens, grid))
    return np.stack(embeddings), np.stack(patches)


def _pool_grid(tokens: np.ndarray, grid: int) -> np.ndarray:
    side = tokens.shape[0]
    grid = min(grid, side)
    rows = _cell_slices(side, grid)
    cols = _cell_slices(side, grid)
    out = np.empty((grid, grid, tokens.shape[-1]), dtype=tokens.dtype)
    for iy, rs in enumerate(rows):
        for ix, cs in enumerate(cols):
            out[iy, ix] = tokens[rs, cs].mean(axis=(0, 1))
    return out


# ---------------------------------------------------------------------------
# segment backbones
# ---------------------------------------------------------------------------

def pooled_segment_features(
    frame_embeddings: np.ndarray, segments: list[range]
) -> np.ndarray:
    """Mean and standard deviation of the frame embeddings over each segment."""
    rows = []
    for seg in segments:
        block = frame_embeddings[list(seg)]
        rows.append(np.concatenate([block.mean(axis=0), block.std(axis=0)]))
    return np.stack(rows)


# ---------------------------------------------------------------------------
# flow backbones
# ---------------------------------------------------------------------------

FARNEBACK_PARAMS = dict(
    pyr_scale=0.5, levels=3, winsize=15, iterations=3, poly_n=5, poly_sigma=1.2, flags=0
)


def farneback_flow(frames: np.ndarray) -> np.ndarray:
    """Dense Farnebäck flow between consecutive luma frames, (N-1, H, W, 2)."""
    import cv2

    luma = rgb_to_luma(frames)
    gray = np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)
    fields = [
        cv2.calcOpticalFlowFarneback(gray[i], gray[i + 1], None, **FARNEBACK_PARAMS)
        for i in range(frames.shape[0] - 1)
    ]
    return np.stack(fields).astype(np.float64)


def raft_flow(frames: np.ndarray) -> np.ndarray:
    """torchvision RAFT (small); needs downloadable weights."""
    try:
        import torch
        from torchvision.models.optical_flow import Raft_Small_Weights, raft_small
    except ImportError as exc:
        raise BackboneError(f"torch/torchvision unavailable: {exc}") from exc
    try:
        weights = Raft_Small_Weights.DEFAULT
        model = raft_small(weights=weights).eval()
    except Exception as exc:
        raise BackboneError(f"could not load RAFT weights: {exc}") from exc

    transform = weights.transforms()
    fields = []
    with torch.no_grad():
        for i in range(frames.shape[0] - 1):
            a = torch.from_numpy(frames[i]).permute(2, 0, 1).unsqueeze(0)
            b = torch.from_numpy(frames[i + 1]).permute(2, 0, 1).unsqueeze(0)
            a, b = transform(a, b)
            flow = model(a, b)[-1][0].permute(1, 2, 0).numpy()
            fields.append(flow)
    return np.stack(fields).astype(np.float64)


IMAGE_BACKBONES = {"grid": grid_image_features, "vit-torch": vit_image_features}
SEGMENT_BACKBONES = {"pooled": pooled_segment_features}
FLOW_BACKBONES = {"farneback": farneback_flow, "raft-torch": raft_flow}


def resolve(registry: dict, name: str, kind: str):
    try:
        return registry[name]
    except KeyError:
        known = ", ".join(sorted(registry))
        raise BackboneError(f"unknown {kind} backbone {name!r} (known: {known})") from None
