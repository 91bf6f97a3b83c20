"""Wire formats shared with the core toolkit, reimplemented here on purpose:
the sidecar couples to the core through files only.

``.devf``: magic DEVF | u32-LE version=1 | u32-LE N, H, W | N*H*W*3 RGB bytes.
``DEVB``:  magic DEVB | u32-LE version=1 | u32-LE section_count; per section
u8 tag | u32-LE rank | rank*u32-LE dims | f32-LE row-major data. Tags:
1 frame_embeddings, 2 patch_maps, 3 segment_embeddings, 4 flow_fields.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np


class SidecarError(Exception):
    """Base error for the sidecar."""


class FormatError(SidecarError):
    pass


SECTION_TAGS = {
    "frame_embeddings": 1,
    "patch_maps": 2,
    "segment_embeddings": 3,
    "flow_fields": 4,
}
IMAGE_EXTENSIONS = {".png", ".bmp"}


def read_frames(path: Path | str) -> np.ndarray:
    """Load (N, H, W, 3) uint8 frames from a .devf file or an image directory."""
    path = Path(path)
    if path.is_dir():
        from PIL import Image

        names = sorted(p.name for p in path.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)
        if len(names) < 2:
            raise FormatError(f"{path}: found {len(names)} image files, need at least 2")
        frames = [np.asarray(Image.open(path / n).convert("RGB"), dtype=np.uint8) for n in names]
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise FormatError(f"{path}: mixed frame dimensions {sorted(shapes)}")
        return np.stack(frames)

    data = path.read_bytes()
    if len(data) < 20:
        raise FormatError(f"{path}: truncated header")
    magic, version, n, h, w = struct.unpack_from("<4sIIII", data, 0)
    if magic != b"DEVF":
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = n * h * w * 3
    if len(data) - 20 != expected:
        raise FormatError(f"{path}: payload {len(data) - 20} bytes, expected {expected}")
    if n < 2:
        raise FormatError(f"{path}: need at least 2 frames, got {n}")
    return np.frombuffer(data, dtype=np.uint8, offset=20).reshape(n, h, w, 3)


def write_devb(sections: dict[str, np.ndarray], path: Path | str) -> None:
    """Write sections (already f32-compatible arrays) in tag order."""
    parts = []
    count = 0
    for name, tag in sorted(SECTION_TAGS.items(), key=lambda item: item[1]):
        if name not in sections or sections[name] is None:
            continue
        arr = np.ascontiguousarray(sections[name], dtype="<f4")
        if not np.all(np.isfinite(arr)):
            raise FormatError(f"section {name} contains non-finite values")
        count += 1
        parts.append(struct.pack("<BI", tag, arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    header = struct.pack("<4sII", b"DEVB", 1, count)
    Path(path).write_bytes(header + b"".join(parts))
