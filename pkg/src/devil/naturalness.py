"""Naturalness grading of videos through an external multimodal endpoint.

Each video is summarized by 8 uniformly sampled frames, posted as base64 PNG
images together with a fixed grading instruction. The response is treated as
opaque text and parsed by earliest case-insensitive occurrence of one of the
five level names. Mock mode replaces the endpoint with a deterministic level
derived from a hash of the video id, so CI runs are network-free.
"""

from __future__ import annotations

import base64
import hashlib
import io as _io
import json
import os
import time
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Optional

import numpy as np
from PIL import Image

from .errors import ToolError
from .metrics import NATURALNESS_LEVELS
from .model import FrameSequence

SAMPLE_FRAMES = 8

DEFAULT_INSTRUCTION = (
    "Watch these video frames and rate how natural the depicted content is. "
    "Reply with exactly one of the following levels: Almost Real, "
    "Slightly Unrealistic, Moderately Unrealistic, Noticeably Unrealistic, "
    "Completely Fictitious."
)


def sample_frames(seq: FrameSequence, count: int = SAMPLE_FRAMES) -> np.ndarray:
    """Uniformly spaced frame subset (with repetition when N < count)."""
    indices = np.round(np.linspace(0, seq.frame_count - 1, count)).astype(int)
    return seq.frames[indices]


def encode_frames_base64(frames: np.ndarray) -> list[str]:
    encoded = []
    for frame in frames:
        buf = _io.BytesIO()
        Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
        encoded.append(base64.b64encode(buf.getvalue()).decode("ascii"))
    return encoded


def parse_level(text: str) -> Optional[str]:
    """Earliest case-insensitive occurrence of a level name, or None."""
    lowered = text.lower()
    best: tuple[int, str] | None = None
    for level in NATURALNESS_LEVELS:
        pos = lowered.find(level.lower())
        if pos >= 0 and (best is None or pos < best[0]):
            best = (pos, level)
    return best[1] if best else None


def mock_level(video_id: str) -> str:
    """Deterministic level from a stable hash of the video id."""
    digest = hashlib.sha256(video_id.encode("utf-8")).digest()
    return NATURALNESS_LEVELS[digest[0] % len(NATURALNESS_LEVELS)]


@dataclass
class EndpointConfig:
    url: str
    credential_env: Optional[str] = None
    instruction: str = DEFAULT_INSTRUCTION
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 1.0


def query_endpoint(config: EndpointConfig, frames_b64: list[str]) -> str:
    """POST the frames and instruction; retry with exponential backoff."""
    payload = json.dumps({"frames": frames_b64, "instruction": config.instruction}).encode()
    headers = {"Content-Type": "application/json"}
    if config.credential_env:
        credential = os.environ.get(config.credential_env, "")
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
    last_error: Exception | None = None
    for attempt in range(config.retries):
        request = urllib.request.Request(config.url, data=payload, headers=headers)
        try:
            with urllib.request.urlopen(request, timeout=config.timeout) as response:
                return response.read().decode("utf-8", errors="replace")
        except (urllib.error.URLError, OSError) as exc:
            last_error = exc
            if attempt + 1 < config.retries:
                time.sleep(config.backoff * 2**attempt)
    raise ToolError(f"endpoint failed after {config.retries} attempts: {last_error}")


def grade_video(
    video_id: str,
    seq: Optional[FrameSequence],
    config: Optional[EndpointConfig],
    mock: bool,
) -> dict:
    """Grade one video; returns {"level": name} or {"error": reason}."""
    if mock:
        return {"level": mock_level(video_id)}
    if config is None:
        return {"error": "no endpoint configured"}
    try:
        frames = sample_frames(seq)
        text = query_endpoint(config, encode_frames_base64(frames))
    except ToolError as exc:
        return {"error": str(exc)}
    level = parse_level(text)
    if level is None:
        return {"error": "parse_failure", "response_prefix": text[:200]}
    return {"level": level}
