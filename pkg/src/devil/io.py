"""File formats: raw video containers, feature files, benchmark tables, reports.

Binary layouts (all integers little-endian):

``.devf`` raw video
    magic ``DEVF`` | u32 version=1 | u32 N | u32 H | u32 W | N*H*W*3 bytes RGB,
    row-major, frame-major.

``DEVB`` feature file
    magic ``DEVB`` | u32 version=1 | u32 section_count, then per section:
    u8 tag | u32 rank | rank * u32 dims | f32 data row-major.
    Tags: 1 frame_embeddings, 2 patch_maps, 3 segment_embeddings, 4 flow_fields.

Text tables are UTF-8: the benchmark is JSONL with ``id``/``prompt``/``grade``
fields; quality and ratings are CSV with fixed headers. Reports are JSON with
sorted keys so equal runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .errors import (
    FormatError,
    InconsistencyError,
    TooFewFramesError,
    ValidationError,
)
from .model import (
    BenchmarkEntry,
    EmbeddingBundle,
    EvaluationReport,
    FrameSequence,
    QualityRecord,
    RatingsRecord,
)

DEVF_MAGIC = b"DEVF"
DEVB_MAGIC = b"DEVB"
FORMAT_VERSION = 1

IMAGE_EXTENSIONS = {".png", ".bmp"}

_SECTION_TAGS = {
    1: "frame_embeddings",
    2: "patch_maps",
    3: "segment_embeddings",
    4: "flow_fields",
}
_SECTION_NAMES = {name: tag for tag, name in _SECTION_TAGS.items()}
_SECTION_RANKS = {1: 2, 2: 4, 3: 2, 4: 4}

PathLike = Union[str, Path]


# ---------------------------------------------------------------------------
# raw video
# ---------------------------------------------------------------------------

def load_frames(source: PathLike) -> FrameSequence:
    """Load a video from a ``.devf`` container or a directory of images.

    Directory frames are ordered by lexicographic filename.
    """
    source = Path(source)
    if source.is_dir():
        return _load_frames_dir(source)
    return _load_frames_devf(source)


def _load_frames_devf(path: Path) -> FrameSequence:
    data = path.read_bytes()
    if len(data) < 20:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, n, h, w = struct.unpack_from("<4sIIII", data, 0)
    if magic != DEVF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if n < 2:
        raise TooFewFramesError(f"{path}: declares {n} frames, need at least 2")
    expected = n * h * w * 3
    payload = data[20:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} for N={n} {w}x{h}"
        )
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(n, h, w, 3)
    return FrameSequence(frames)


def _load_frames_dir(path: Path) -> FrameSequence:
    names = sorted(p.name for p in path.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)
    if len(names) < 2:
        raise TooFewFramesError(f"{path}: found {len(names)} image files, need at least 2")
    frames = []
    shape = None
    for name in names:
        with Image.open(path / name) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise InconsistencyError(
                f"{path}: {name} is {arr.shape[1]}x{arr.shape[0]}, "
                f"earlier frames are {shape[1]}x{shape[0]}"
            )
        frames.append(arr)
    return FrameSequence(np.stack(frames))


def save_frames(seq: FrameSequence, path: PathLike) -> None:
    """Write a ``.devf`` container."""
    path = Path(path)
    header = struct.pack(
        "<4sIIII", DEVF_MAGIC, FORMAT_VERSION, seq.frame_count, seq.height, seq.width
    )
    path.write_bytes(header + seq.frames.tobytes())


# ---------------------------------------------------------------------------
# feature bundles
# ---------------------------------------------------------------------------

def load_embeddings(path: PathLike) -> EmbeddingBundle:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, count = struct.unpack_from("<4sII", data, 0)
    if magic != DEVB_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    offset = 12
    sections: dict[str, np.ndarray] = {}
    for _ in range(count):
        if offset + 5 > len(data):
            raise FormatError(f"{path}: truncated section header")
        tag, rank = struct.unpack_from("<BI", data, offset)
        offset += 5
        if tag not in _SECTION_TAGS:
            raise FormatError(f"{path}: unknown section tag {tag}")
        name = _SECTION_TAGS[tag]
        if name in sections:
            raise FormatError(f"{path}: duplicate section {name}")
        if rank != _SECTION_RANKS[tag]:
            raise FormatError(f"{path}: section {name} has rank {rank}, expected {_SECTION_RANKS[tag]}")
        if offset + 4 * rank > len(data):
            raise FormatError(f"{path}: truncated dims for section {name}")
        dims = struct.unpack_from(f"<{rank}I", data, offset)
        offset += 4 * rank
        size = int(np.prod(dims, dtype=np.int64)) * 4
        if offset + size > len(data):
            raise FormatError(f"{path}: truncated payload for section {name}")
        arr = np.frombuffer(data, dtype="<f4", count=size // 4, offset=offset).reshape(dims)
        offset += size
        sections[name] = arr
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after last section")
    return EmbeddingBundle(**sections)


def save_embeddings(bundle: EmbeddingBundle, path: PathLike) -> None:
    """Write a ``DEVB`` file; sections are emitted in tag order so equal
    bundles always produce identical bytes."""
    parts = []
    count = 0
    for tag in sorted(_SECTION_TAGS):
        arr = getattr(bundle, _SECTION_TAGS[tag])
        if arr is None:
            continue
        count += 1
        arr = np.ascontiguousarray(arr, dtype="<f4")
        parts.append(struct.pack("<BI", tag, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    header = struct.pack("<4sII", DEVB_MAGIC, FORMAT_VERSION, count)
    Path(path).write_bytes(header + b"".join(parts))


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def load_benchmark(path: PathLike) -> list[BenchmarkEntry]:
    entries = []
    seen = set()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        try:
            entry = BenchmarkEntry(id=str(row["id"]), prompt=str(row["prompt"]), grade=row["grade"])
        except KeyError as exc:
            raise FormatError(f"{path}:{lineno}: missing field {exc}") from exc
        if entry.id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate id {entry.id!r}")
        seen.add(entry.id)
        entries.append(entry)
    return entries


QUALITY_HEADER = [
    "video_id",
    "naturalness",
    "motion_smoothness",
    "subject_consistency",
    "background_consistency",
]
RATINGS_HEADER = ["video_id", "frame_grade", "segment_grade", "video_grade", "naturalness_grade"]


def _read_csv(path: Path, header: list[str]):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if first != header:
            raise FormatError(f"{path}: header {first} does not match {header}")
        for lineno, row in enumerate(reader, 2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            yield lineno, row


def load_quality(path: PathLike) -> dict[str, QualityRecord]:
    path = Path(path)
    records: dict[str, QualityRecord] = {}
    for lineno, row in _read_csv(path, QUALITY_HEADER):
        video_id = row[0]
        if video_id in records:
            raise ValidationError(f"{path}:{lineno}: duplicate video_id {video_id!r}")
        values = {}
        for name, cell in zip(QUALITY_HEADER[1:], row[1:]):
            if cell.strip() == "":
                values[name] = None
                continue
            try:
                values[name] = float(cell)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad number {cell!r}") from exc
        try:
            records[video_id] = QualityRecord(video_id=video_id, **values)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return records


def load_ratings(path: PathLike) -> dict[str, RatingsRecord]:
    path = Path(path)
    records: dict[str, RatingsRecord] = {}
    for lineno, row in _read_csv(path, RATINGS_HEADER):
        video_id = row[0]
        if video_id in records:
            raise ValidationError(f"{path}:{lineno}: duplicate video_id {video_id!r}")
        grades = {}
        for name, cell in zip(RATINGS_HEADER[1:], row[1:]):
            try:
                grades[name] = int(cell)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad grade {cell!r}") from exc
        try:
            records[video_id] = RatingsRecord(video_id=video_id, **grades)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return records


def save_quality(records: dict[str, QualityRecord], path: PathLike) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(QUALITY_HEADER)
        for video_id in sorted(records):
            rec = records[video_id]
            writer.writerow(
                [video_id]
                + [
                    "" if getattr(rec, name) is None else repr(getattr(rec, name))
                    for name in QUALITY_HEADER[1:]
                ]
            )


def save_ratings(records: dict[str, RatingsRecord], path: PathLike) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RATINGS_HEADER)
        for video_id in sorted(records):
            rec = records[video_id]
            writer.writerow([video_id] + [getattr(rec, name) for name in RATINGS_HEADER[1:]])


def save_benchmark(entries: list[BenchmarkEntry], path: PathLike) -> None:
    lines = [
        json.dumps({"id": e.id, "prompt": e.prompt, "grade": e.grade}, sort_keys=True)
        for e in entries
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

REPORT_SCHEMA = {
    "type": "object",
    "required": ["per_video", "model_metrics", "correlations", "config"],
    "additionalProperties": False,
    "properties": {
        "per_video": {
            "type": "object",
            "additionalProperties": {"type": "object"},
        },
        "model_metrics": {"type": "object"},
        "correlations": {"type": "object"},
        "config": {"type": "object"},
    },
}


def write_report(report: EvaluationReport, path: PathLike) -> None:
    """Serialize a report as JSON with sorted keys and full float precision."""
    text = json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_report(path: PathLike) -> EvaluationReport:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return EvaluationReport.from_dict(data)
