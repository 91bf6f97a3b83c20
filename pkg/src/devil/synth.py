"""Deterministic synthetic videos and features with known dynamics ordering.

Pixel synthesis uses integer-only math; the noise source is counter-based
splitmix64 (seed + k * golden-gamma, mixed), so generated frames are bytewise
identical across runs and platforms. Feature synthesis produces tensors whose
downstream scores are known analytically (constant series, repeating loops,
near-orthogonal noise).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .io import save_benchmark, save_embeddings, save_frames, save_quality, save_ratings
from .model import (
    BenchmarkEntry,
    EmbeddingBundle,
    FrameSequence,
    QualityRecord,
    RatingsRecord,
)

KINDS = ("static", "translate", "periodic", "noise", "scene_cut")
PATTERNS = ("checkerboard", "sinusoid", "gradient")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int) -> np.ndarray:
    """Counter-based splitmix64 stream: element k mixes seed + (k+1)*gamma."""
    counters = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + counters * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def splitmix_bytes(seed: int, count: int) -> np.ndarray:
    """`count` deterministic uint8 values."""
    words = splitmix64(seed, (count + 7) // 8)
    return words.astype("<u8").view(np.uint8)[:count]


def splitmix_floats(seed: int, count: int) -> np.ndarray:
    """`count` deterministic floats in [0, 1)."""
    return (splitmix64(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _checkerboard(h: int, w: int, cell: int = 8) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    return (((yy // cell + xx // cell) % 2) * 255).astype(np.uint8)


def _gradient(h: int, w: int) -> np.ndarray:
    xx = np.arange(w, dtype=np.int64)
    row = (xx * 255) // max(w - 1, 1)
    return np.broadcast_to(row, (h, w)).astype(np.uint8)


def _sinusoid(h: int, w: int, period: int = 16) -> np.ndarray:
    """Smooth periodic wave from an integer smoothstep of a triangle wave."""
    yy, xx = np.mgrid[0:h, 0:w]
    t = (xx + yy // 2) % period
    tri = np.minimum(2 * t, 2 * (period - t))          # 0..period
    u = (tri * 256) // period                          # 0..256 fixed point
    s = (u * u * (768 - 2 * u)) // 65536               # 0..256 smoothstep
    return ((s * 255) // 256).astype(np.uint8)


def _pattern(name: str, h: int, w: int) -> np.ndarray:
    if name == "checkerboard":
        gray = _checkerboard(h, w)
    elif name == "gradient":
        gray = _gradient(h, w)
    elif name == "sinusoid":
        gray = _sinusoid(h, w)
    else:
        raise ValidationError(f"unknown pattern {name!r}")
    return np.repeat(gray[:, :, None], 3, axis=2)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic video."""

    kind: str
    n: int = 16
    height: int = 64
    width: int = 64
    pattern: str = "checkerboard"
    speed: int = 1
    loop_length: int = 8
    repeats: int = 4
    seed: int = 0
    cut_point: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}")
        if self.pattern not in PATTERNS:
            raise ValidationError(f"unknown pattern {self.pattern!r}")
        if self.n < 2:
            raise ValidationError(f"need at least 2 frames, got {self.n}")
        if self.height < 16 or self.width < 16:
            raise ValidationError(f"frame size {self.width}x{self.height} below minimum 16")
        if self.kind == "translate" and self.speed < 1:
            raise ValidationError(f"translate speed must be >= 1, got {self.speed}")
        if self.kind == "periodic":
            if self.loop_length < 2 or self.repeats < 2:
                raise ValidationError("periodic needs loop_length >= 2 and repeats >= 2")
            if self.n != self.loop_length * self.repeats:
                raise ValidationError(
                    f"periodic needs n == loop_length*repeats, got {self.n} != "
                    f"{self.loop_length}*{self.repeats}"
                )
        if self.kind == "scene_cut":
            cut = self.n // 2 if self.cut_point is None else self.cut_point
            if not 1 <= cut <= self.n - 1:
                raise ValidationError(f"cut_point {cut} outside 1..{self.n - 1}")
            object.__setattr__(self, "cut_point", cut)


def generate(spec: SynthSpec) -> FrameSequence:
    """Render the synthetic video for a spec; bytewise deterministic."""
    n, h, w = spec.n, spec.height, spec.width
    if spec.kind == "noise":
        data = splitmix_bytes(spec.seed, n * h * w * 3)
        return FrameSequence(data.reshape(n, h, w, 3).copy())

    base = _pattern(spec.pattern, h, w)
    if spec.kind == "static":
        frames = np.broadcast_to(base, (n, h, w, 3)).copy()
    elif spec.kind == "translate":
        frames = np.stack([np.roll(base, i * spec.speed, axis=1) for i in range(n)])
    elif spec.kind == "periodic":
        stride = max(1, w // spec.loop_length)
        loop = [np.roll(base, j * stride, axis=1) for j in range(spec.loop_length)]
        frames = np.stack([loop[i % spec.loop_length] for i in range(n)])
    elif spec.kind == "scene_cut":
        frames = np.broadcast_to(base, (n, h, w, 3)).copy()
        frames[spec.cut_point :] = 255 - base
    else:  # pragma: no cover - guarded by SynthSpec
        raise ValidationError(f"unknown kind {spec.kind!r}")
    return FrameSequence(frames)


# ---------------------------------------------------------------------------
# synthetic features
# ---------------------------------------------------------------------------

PATCH_GRID = 8

# Loop-step rotation for periodic patch features: a fast quarter-turn carrying
# most of the energy plus a slow eighth-turn that keeps all loop vectors
# pairwise distinct. Chosen to maximize the looped-vs-shuffled ACF gap
# reachable with unit vectors.
_PERIODIC_FAST_WEIGHT = np.sqrt(0.9)
_PERIODIC_SLOW_WEIGHT = np.sqrt(0.1)


def _periodic_patch_vector(step_in_loop: int, loop_length: int, phase: float) -> np.ndarray:
    fast = 2.0 * np.pi * 2.0 * step_in_loop / loop_length + phase
    slow = 2.0 * np.pi * step_in_loop / loop_length + 2.0 * phase
    return np.array(
        [
            _PERIODIC_FAST_WEIGHT * np.cos(fast),
            _PERIODIC_FAST_WEIGHT * np.sin(fast),
            _PERIODIC_SLOW_WEIGHT * np.cos(slow),
            _PERIODIC_SLOW_WEIGHT * np.sin(slow),
        ]
    )


def _rotating_vector(angle: float, phase: float) -> np.ndarray:
    half = angle / 2.0 + phase
    return np.array(
        [
            np.sqrt(0.5) * np.cos(angle),
            np.sqrt(0.5) * np.sin(angle),
            np.sqrt(0.5) * np.cos(half),
            np.sqrt(0.5) * np.sin(half),
        ]
    )


def generate_features(spec: SynthSpec, grid: int = PATCH_GRID) -> EmbeddingBundle:
    """Synthesize an EmbeddingBundle with analytically known structure.

    static    -> constant vectors everywhere, zero flow
    translate -> unit vectors rotating at a speed-proportional rate,
                 constant (speed, 0) flow
    periodic  -> frame embeddings cycle an orthonormal basis; patch vectors
                 cycle a fixed rotation so frame i equals frame i mod L
    noise     -> seeded near-orthogonal gaussian vectors
    scene_cut -> two constant regimes split at the cut point
    """
    n, h, w = spec.n, spec.height, spec.width
    positions = grid * grid
    patch_phases = 2.0 * np.pi * np.arange(positions) / positions

    if spec.kind == "static":
        frame_emb = np.ones((n, 8))
        patch = np.stack(
            [np.cos(patch_phases), np.sin(patch_phases), np.ones(positions), np.ones(positions)],
            axis=1,
        )
        patch_maps = np.broadcast_to(patch.reshape(grid, grid, 4), (n, grid, grid, 4)).copy()
        segment_emb = np.ones((4, 4))
        flow = np.zeros((n - 1, h, w, 2))
        return EmbeddingBundle(
            frame_embeddings=frame_emb,
            patch_maps=patch_maps,
            segment_embeddings=segment_emb,
            flow_fields=flow,
        )

    if spec.kind == "translate":
        rate = 2.0 * np.pi * spec.speed / 32.0
        angles = rate * np.arange(n)
        frame_emb = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        patch_maps = np.empty((n, grid, grid, 4))
        for p, phase in enumerate(patch_phases):
            vecs = np.stack([_rotating_vector(a + phase, phase) for a in angles])
            patch_maps[:, p // grid, p % grid, :] = vecs
        seg_len = max(int(0.25 * n), 1)
        seg_angles = [angles[i * seg_len : (i + 1) * seg_len].mean() for i in range(4)]
        segment_emb = np.stack([[np.cos(a), np.sin(a)] for a in seg_angles])
        flow = np.zeros((n - 1, h, w, 2))
        flow[..., 0] = spec.speed
        return EmbeddingBundle(
            frame_embeddings=frame_emb,
            patch_maps=patch_maps,
            segment_embeddings=segment_emb,
            flow_fields=flow,
        )

    if spec.kind == "periodic":
        loop = spec.loop_length
        dim = max(loop, 2)
        frame_emb = np.eye(dim)[np.arange(n) % loop]
        patch_maps = np.empty((n, grid, grid, 4))
        for p, phase in enumerate(patch_phases):
            loop_vecs = np.stack(
                [_periodic_patch_vector(j, loop, phase) for j in range(loop)]
            )
            patch_maps[:, p // grid, p % grid, :] = loop_vecs[np.arange(n) % loop]
        segment_emb = np.ones((4, 4))
        return EmbeddingBundle(
            frame_embeddings=frame_emb,
            patch_maps=patch_maps,
            segment_embeddings=segment_emb,
        )

    if spec.kind == "noise":
        rng = np.random.default_rng(spec.seed)
        return EmbeddingBundle(
            frame_embeddings=rng.standard_normal((n, 16)),
            patch_maps=rng.standard_normal((n, grid, grid, 6)),
            segment_embeddings=rng.standard_normal((4, 12)),
        )

    if spec.kind == "scene_cut":
        cut = spec.cut_point
        frame_emb = np.zeros((n, 2))
        frame_emb[:cut, 0] = 1.0
        frame_emb[cut:, 1] = 1.0
        patch_maps = np.empty((n, grid, grid, 4))
        for p, phase in enumerate(patch_phases):
            before = _rotating_vector(phase, phase)
            after = _rotating_vector(phase + np.pi / 2.0, phase)
            patch_maps[:cut, p // grid, p % grid, :] = before
            patch_maps[cut:, p // grid, p % grid, :] = after
        seg_len = max(int(0.25 * n), 1)
        segment_emb = np.zeros((4, 2))
        for s in range(4):
            mid = s * seg_len + seg_len / 2.0
            segment_emb[s, 0 if mid < cut else 1] = 1.0
        return EmbeddingBundle(
            frame_embeddings=frame_emb,
            patch_maps=patch_maps,
            segment_embeddings=segment_emb,
        )

    raise ValidationError(f"unknown kind {spec.kind!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# benchmark corpus
# ---------------------------------------------------------------------------

_GRADE_RECIPES = {
    1: ("static", {}),
    2: ("translate", {"speed": 1}),
    3: ("translate", {"speed": 2}),
    4: ("scene_cut", {}),
    5: ("noise", {}),
}

_GRADE_PROMPTS = {
    1: "a fixed {pattern} backdrop with nothing moving",
    2: "a {pattern} surface drifting slowly sideways",
    3: "a {pattern} surface sliding steadily across the view",
    4: "a {pattern} scene that abruptly cuts to its negative",
    5: "violently flickering random static filling the screen",
}


def build_corpus(
    out_dir: Path | str,
    count: int = 24,
    seed: int = 0,
    n_frames: int = 16,
    size: int = 64,
    devb_every: int = 3,
) -> dict:
    """Write a self-contained graded corpus: .devf videos, DEVB features for
    two thirds of them, and benchmark/ratings/quality tables.

    Grades cycle 1..5 with dynamics intensity designed to rise with grade;
    ratings repeat the designed grade; quality declines with grade plus a
    small deterministic jitter. Byte-deterministic for a given seed.
    """
    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    devb_dir = out_dir / "embeddings"
    frames_dir.mkdir(parents=True, exist_ok=True)
    devb_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    ratings = {}
    quality = {}
    ids = []
    for i in range(count):
        grade = i % 5 + 1
        kind, params = _GRADE_RECIPES[grade]
        pattern = PATTERNS[i % len(PATTERNS)]
        spec = SynthSpec(
            kind=kind,
            n=n_frames,
            height=size,
            width=size,
            pattern=pattern,
            seed=seed * 1000 + i,
            **params,
        )
        video_id = f"vid_{i:03d}"
        ids.append(video_id)
        save_frames(generate(spec), frames_dir / f"{video_id}.devf")
        if i % devb_every != devb_every - 1:
            save_embeddings(generate_features(spec), devb_dir / f"{video_id}.devb")

        entries.append(
            BenchmarkEntry(
                id=video_id,
                prompt=_GRADE_PROMPTS[grade].format(pattern=pattern),
                grade=grade,
            )
        )
        ratings[video_id] = RatingsRecord(
            video_id=video_id,
            frame_grade=grade,
            segment_grade=grade,
            video_grade=grade,
            naturalness_grade=6 - grade,
        )
        jitter = (splitmix_floats(seed * 7919 + i, 4) - 0.5) * 0.04
        values = np.clip(1.0 - 0.18 * (grade - 1) + jitter, 0.0, 1.0)
        quality[video_id] = QualityRecord(
            video_id=video_id,
            naturalness=float(values[0]),
            motion_smoothness=float(values[1]),
            subject_consistency=float(values[2]),
            background_consistency=float(values[3]),
        )

    save_benchmark(entries, out_dir / "benchmark.jsonl")
    save_ratings(ratings, out_dir / "ratings.csv")
    save_quality(quality, out_dir / "quality.csv")
    relative = {
        "ids": ids,
        "frames_dir": "frames",
        "embeddings_dir": "embeddings",
        "benchmark": "benchmark.jsonl",
        "ratings": "ratings.csv",
        "quality": "quality.csv",
        "seed": seed,
        "count": count,
    }
    # the on-disk manifest stays relative so equal corpora are byte-identical
    # regardless of where they were generated
    (out_dir / "corpus.json").write_text(
        json.dumps(relative, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    manifest = dict(relative)
    for key in ("frames_dir", "embeddings_dir", "benchmark", "ratings", "quality"):
        manifest[key] = str(out_dir / relative[key])
    return manifest
