"""Inter-frame dynamics scores: optical flow strength, structural dynamics,
perceptual dynamics.

The built-in flow estimator is exhaustive block matching on luma. Candidate
windows wrap around the image borders (toroidal search), which keeps the
search space identical for every block and makes the estimate exact on
wrap-translating synthetic content; precomputed dense fields take precedence
when available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn
from scipy.ndimage import convolve1d

from .errors import InconsistencyError
from .model import FrameSequence, luma

FLOW_BLOCK = 16
FLOW_SEARCH_RADIUS = 8
FLOW_STEP = 8

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2

PHASH_RESIZE = 32
PHASH_BLOCK = 8


def _as_luma(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim == 3:
        return luma(frame)
    return frame.astype(np.uint8)


# ---------------------------------------------------------------------------
# block-matching optical flow
# ---------------------------------------------------------------------------

def _block_anchors(size: int, block: int, step: int) -> np.ndarray:
    anchors = list(range(0, size - block + 1, step))
    if anchors[-1] != size - block:
        anchors.append(size - block)
    return np.asarray(anchors)


def _nearest_anchor_index(size: int, anchors: np.ndarray, block: int) -> np.ndarray:
    centers = anchors + (block - 1) / 2.0
    midpoints = (centers[:-1] + centers[1:]) / 2.0
    return np.searchsorted(midpoints, np.arange(size), side="right")


def estimate_flow(
    frame_a: np.ndarray,
    frame_b: np.ndarray,
    block: int = FLOW_BLOCK,
    search_radius: int = FLOW_SEARCH_RADIUS,
    step: int = FLOW_STEP,
) -> np.ndarray:
    """Estimate per-pixel integer flow from ``frame_a`` to ``frame_b``.

    Returns an (H, W, 2) float array of (dx, dy). Each block takes the
    displacement minimizing the sum of absolute luma differences; ties break
    toward the smallest |dx|+|dy|, then smallest dy, then dx. The block field
    is upsampled to pixels by nearest block center.
    """
    la = _as_luma(frame_a).astype(np.int32)
    lb = _as_luma(frame_b).astype(np.int32)
    if la.shape != lb.shape:
        raise InconsistencyError(f"frame shapes differ: {la.shape} vs {lb.shape}")
    h, w = la.shape
    if h < block or w < block:
        raise InconsistencyError(f"frames {w}x{h} smaller than block size {block}")

    # Candidates sorted by tie-break rank so the first SAD minimum wins.
    candidates = [
        (dy, dx)
        for dy in range(-search_radius, search_radius + 1)
        for dx in range(-search_radius, search_radius + 1)
    ]
    candidates.sort(key=lambda c: (abs(c[1]) + abs(c[0]), c[0], c[1]))

    ys = _block_anchors(h, block, step)
    xs = _block_anchors(w, block, step)

    sads = np.empty((len(candidates), len(ys), len(xs)), dtype=np.int64)
    for idx, (dy, dx) in enumerate(candidates):
        diff = np.abs(la - np.roll(lb, (-dy, -dx), axis=(0, 1)))
        # summed-area table with a zero border for O(1) block sums
        sat = np.zeros((h + 1, w + 1), dtype=np.int64)
        np.cumsum(np.cumsum(diff, axis=0), axis=1, out=sat[1:, 1:])
        sads[idx] = (
            sat[np.ix_(ys + block, xs + block)]
            - sat[np.ix_(ys + block, xs)]
            - sat[np.ix_(ys, xs + block)]
            + sat[np.ix_(ys, xs)]
        )

    best = np.argmin(sads, axis=0)
    cand = np.asarray(candidates)
    block_dy = cand[best, 0]
    block_dx = cand[best, 1]

    yi = _nearest_anchor_index(h, ys, block)
    xi = _nearest_anchor_index(w, xs, block)
    field = np.empty((h, w, 2), dtype=np.float64)
    field[..., 0] = block_dx[np.ix_(yi, xi)]
    field[..., 1] = block_dy[np.ix_(yi, xi)]
    return field


def flow_magnitude(field: np.ndarray) -> float:
    """Mean per-pixel flow magnitude of one (H, W, 2) field."""
    return float(np.hypot(field[..., 0], field[..., 1]).mean())


def optical_flow_strength(
    seq: FrameSequence,
    flow_fields: np.ndarray | None = None,
    block: int = FLOW_BLOCK,
    search_radius: int = FLOW_SEARCH_RADIUS,
    step: int = FLOW_STEP,
) -> float:
    """Mean over frame pairs of the mean flow magnitude, in pixels/frame.

    Precomputed ``flow_fields`` of shape (N-1, H, W, 2) take precedence over
    the built-in estimator.
    """
    n = seq.frame_count
    if flow_fields is not None:
        flow_fields = np.asarray(flow_fields)
        expected = (n - 1, seq.height, seq.width, 2)
        if flow_fields.shape != expected:
            raise InconsistencyError(
                f"flow_fields shape {flow_fields.shape} does not match {expected}"
            )
        mags = [flow_magnitude(flow_fields[i]) for i in range(n - 1)]
    else:
        lumas = seq.lumas()
        mags = [
            flow_magnitude(estimate_flow(lumas[i], lumas[i + 1], block, search_radius, step))
            for i in range(n - 1)
        ]
    return float(np.mean(mags))


# ---------------------------------------------------------------------------
# SSIM
# ---------------------------------------------------------------------------

def _gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


_SSIM_KERNEL = _gaussian_kernel()


def _gaussian_filter(img: np.ndarray) -> np.ndarray:
    out = convolve1d(img, _SSIM_KERNEL, axis=0, mode="reflect")
    return convolve1d(out, _SSIM_KERNEL, axis=1, mode="reflect")


def ssim(frame_a: np.ndarray, frame_b: np.ndarray) -> float:
    """Mean structural similarity between two frames, computed on luma.

    11x11 Gaussian window (sigma 1.5), C1=(0.01*255)^2, C2=(0.03*255)^2,
    symmetric boundary padding, mean over the full local map. 1.0 for
    identical frames; may be negative for anti-correlated content.
    """
    a = _as_luma(frame_a).astype(np.float64)
    b = _as_luma(frame_b).astype(np.float64)
    if a.shape != b.shape:
        raise InconsistencyError(f"frame shapes differ: {a.shape} vs {b.shape}")

    mu_a = _gaussian_filter(a)
    mu_b = _gaussian_filter(b)
    var_a = _gaussian_filter(a * a) - mu_a * mu_a
    var_b = _gaussian_filter(b * b) - mu_b * mu_b
    cov = _gaussian_filter(a * b) - mu_a * mu_b

    numerator = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    denominator = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float((numerator / denominator).mean())


def structural_dynamics(seq: FrameSequence) -> float:
    """1 minus the mean consecutive-pair SSIM; 0 for a static video, may
    exceed 1 for anti-correlated consecutive frames."""
    lumas = seq.lumas()
    values = [ssim(lumas[i], lumas[i + 1]) for i in range(seq.frame_count - 1)]
    return 1.0 - float(np.mean(values))


# ---------------------------------------------------------------------------
# perceptual hash
# ---------------------------------------------------------------------------

def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample with half-pixel (area-aligned) centers."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape

    def coords(out_size, in_size):
        src = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
        src = np.clip(src, 0.0, in_size - 1.0)
        lo = np.floor(src).astype(np.int64)
        lo = np.minimum(lo, in_size - 1)
        hi = np.minimum(lo + 1, in_size - 1)
        frac = src - lo
        return lo, hi, frac

    ylo, yhi, yfrac = coords(out_h, h)
    xlo, xhi, xfrac = coords(out_w, w)
    top = img[np.ix_(ylo, xlo)] * (1 - xfrac) + img[np.ix_(ylo, xhi)] * xfrac
    bottom = img[np.ix_(yhi, xlo)] * (1 - xfrac) + img[np.ix_(yhi, xhi)] * xfrac
    return top * (1 - yfrac[:, None]) + bottom * yfrac[:, None]


@dataclass(frozen=True)
class PerceptualHash:
    """64-bit DCT-sign fingerprint; bit k (row-major over the 8x8 low-frequency
    block, DC first and forced to 0) is stored at position 63-k."""

    value: int

    def hamming(self, other: "PerceptualHash") -> int:
        return (self.value ^ other.value).bit_count()

    def __str__(self) -> str:
        return f"{self.value:016x}"


def phash(frame: np.ndarray) -> PerceptualHash:
    """Perceptual hash: luma -> bilinear 32x32 -> 2D DCT-II -> sign of each
    of the top-left 8x8 coefficients against the median of the 63 non-DC
    coefficients (DC bit forced to 0)."""
    small = resize_bilinear(_as_luma(frame).astype(np.float64), PHASH_RESIZE, PHASH_RESIZE)
    coeffs = dctn(small, type=2)[:PHASH_BLOCK, :PHASH_BLOCK]
    flat = coeffs.ravel()
    median = np.median(flat[1:])
    value = 0
    for k in range(1, PHASH_BLOCK * PHASH_BLOCK):
        if flat[k] > median:
            value |= 1 << (63 - k)
    return PerceptualHash(value)


def perceptual_dynamics(seq: FrameSequence) -> float:
    """Mean normalized Hamming distance (range [0,1]) between perceptual
    hashes of consecutive frames."""
    lumas = seq.lumas()
    hashes = [phash(lumas[i]) for i in range(seq.frame_count)]
    distances = [
        hashes[i].hamming(hashes[i + 1]) / 64.0 for i in range(seq.frame_count - 1)
    ]
    return float(np.mean(distances))
