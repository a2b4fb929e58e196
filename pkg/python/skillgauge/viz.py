"""Depth-to-grayscale export: near is white, far and invalid are black."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from .errors import EmptyInput, ValidationError
from .ingest import FRAME_NAME, load_depth_sequence, write_pgm
from .models import DepthFrame

GRAY_META_NAME = "gray_meta.json"


@dataclass(frozen=True)
class GrayscaleMapping:
    """Linear map of depth in meters onto 255 (near) .. 0 (far)."""

    near: float
    far: float
    invalid_value: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.near) and math.isfinite(self.far)):
            raise ValidationError("near and far must be finite")
        if not (0 < self.near < self.far):
            raise ValidationError(f"mapping needs 0 < near < far, got near={self.near} far={self.far}")
        if not (0 <= self.invalid_value <= 255):
            raise ValidationError(f"invalid_value {self.invalid_value} outside 0..255")

    def to_dict(self) -> dict[str, Any]:
        return {"near": self.near, "far": self.far, "invalid_value": self.invalid_value}


def depth_to_gray(
    frame: DepthFrame | NDArray[np.uint16],
    mapping: GrayscaleMapping,
    depth_scale: float = 0.001,
) -> NDArray[np.uint8]:
    """``round(255 * (far - clamp(d, near, far)) / (far - near))`` with halves rounded up."""
    raw = frame.values if isinstance(frame, DepthFrame) else np.asarray(frame)
    meters = raw.astype(np.float64) * depth_scale
    clamped = np.clip(meters, mapping.near, mapping.far)
    gray = np.floor(255.0 * (mapping.far - clamped) / (mapping.far - mapping.near) + 0.5)
    out = np.clip(gray, 0, 255).astype(np.uint8)
    out[raw == 0] = mapping.invalid_value
    return out


def auto_mapping(frame: DepthFrame | NDArray[np.uint16], depth_scale: float = 0.001) -> GrayscaleMapping:
    """1st and 99th percentile of the valid depths of ``frame``."""
    raw = frame.values if isinstance(frame, DepthFrame) else np.asarray(frame)
    valid = raw[raw != 0].astype(np.float64) * depth_scale
    if valid.size == 0:
        raise EmptyInput("frame has no valid depth to derive a grayscale range from")
    near, far = (float(v) for v in np.percentile(valid, [1.0, 99.0]))
    if far <= near:
        far = near + depth_scale
    return GrayscaleMapping(near, far)


def convert_sequence(
    dir_path: str | Path,
    out_dir: str | Path,
    mapping: GrayscaleMapping | None = None,
    jobs: int = 1,
) -> list[Path]:
    """Write one 8-bit PGM per depth frame plus ``gray_meta.json``.

    Without an explicit mapping the range is derived from the first frame
    and frozen for the whole recording.
    """
    seq = load_depth_sequence(dir_path)
    scale = seq.meta.depth_scale
    if mapping is None:
        mapping = auto_mapping(seq[0], scale)
        logger.info(f"Derived grayscale range near={mapping.near:.4f} m far={mapping.far:.4f} m")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def convert(frame: DepthFrame) -> Path:
        return write_pgm(out / FRAME_NAME.format(frame.index), depth_to_gray(frame, mapping, scale), maxval=255)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        written = list(pool.map(convert, seq.frames))

    meta = {"near": mapping.near, "far": mapping.far, "normalization": "per-video"}
    (out / GRAY_META_NAME).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {len(written)} grayscale frames to {out}")
    return written
