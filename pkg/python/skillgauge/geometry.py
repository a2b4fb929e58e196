"""
Pixel + depth to metric 3D positions, and per-hand trajectories.

Camera axes follow the pinhole convention: x right, y down, z forward along
the optical axis. Plane names used elsewhere (XY, YZ, XZ) refer to these axes.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from .errors import EmptyInput, InvalidDepth, ParseError, ValidationError
from .models import (
    BoundingBox,
    CameraIntrinsics,
    DepthFrame,
    Detection,
    DetectionSet,
    ObjectClass,
)

DEFAULT_WINDOW = 5


class Point3(NamedTuple):
    """Camera-space position in meters."""

    x: float
    y: float
    z: float


@dataclass(frozen=True, eq=False)
class Trajectory3D:
    """Time-ordered positions of one hand.

    ``frames`` and ``positions`` hold the valid samples; ``gaps`` lists the
    frames without a position. Together they cover a contiguous frame range
    exactly once.
    """

    hand: ObjectClass
    frames: NDArray[np.int64]
    positions: NDArray[np.float64]
    gaps: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        frames = np.array(self.frames, dtype=np.int64).reshape(-1)
        positions = np.array(self.positions, dtype=np.float64).reshape(-1, 3)
        if len(frames) != len(positions):
            raise ValidationError("frames and positions differ in length")
        if len(frames) > 1 and not np.all(np.diff(frames) > 0):
            raise ValidationError("trajectory frame indices must be strictly increasing")
        gaps = tuple(sorted(int(g) for g in self.gaps))
        covered = sorted(frames.tolist() + list(gaps))
        if covered and covered != list(range(covered[0], covered[0] + len(covered))):
            raise ValidationError("samples and gaps must cover a contiguous frame range once")
        for name, arr in (("frames", frames), ("positions", positions)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "gaps", gaps)

    @property
    def samples(self) -> list[tuple[int, Point3]]:
        return [(int(f), Point3(*map(float, p))) for f, p in zip(self.frames, self.positions)]

    @property
    def frame_count(self) -> int:
        return len(self.frames) + len(self.gaps)

    @property
    def first_frame(self) -> int:
        candidates = [*self.frames[:1].tolist(), *self.gaps[:1]]
        return min(candidates) if candidates else 0

    def smoothed(self, window: int) -> Trajectory3D:
        """Centered moving average over valid samples; edges average what is available."""
        _check_odd(window, "smoothing window")
        n = len(self.positions)
        if window == 1 or n == 0:
            return self
        half = window // 2
        csum = np.vstack([np.zeros((1, 3)), np.cumsum(self.positions, axis=0)])
        lo = np.clip(np.arange(n) - half, 0, n)
        hi = np.clip(np.arange(n) + half + 1, 0, n)
        means = (csum[hi] - csum[lo]) / (hi - lo)[:, None]
        return Trajectory3D(self.hand, self.frames, means, self.gaps)


def _check_odd(window: int, what: str) -> None:
    if window < 1 or window % 2 == 0:
        raise ValidationError(f"{what} must be an odd integer >= 1, got {window}")


def deproject(u: float, v: float, depth_raw: float, intr: CameraIntrinsics) -> Point3:
    """Inverse pinhole mapping of pixel (u, v) with raw depth to camera space."""
    if depth_raw <= 0:
        raise InvalidDepth(f"cannot deproject pixel ({u}, {v}) with depth {depth_raw}")
    z = depth_raw * intr.depth_scale
    return Point3((u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z)


def deproject_many(
    us: NDArray[np.float64] | Sequence[float],
    vs: NDArray[np.float64] | Sequence[float],
    depths: NDArray[np.float64] | Sequence[float],
    intr: CameraIntrinsics,
) -> NDArray[np.float64]:
    """Vectorized :func:`deproject`; returns an (N, 3) array."""
    u = np.asarray(us, dtype=np.float64)
    v = np.asarray(vs, dtype=np.float64)
    d = np.asarray(depths, dtype=np.float64)
    if np.any(d <= 0):
        raise InvalidDepth(f"{int(np.sum(d <= 0))} samples have non-positive depth")
    z = d * intr.depth_scale
    return np.column_stack(((u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z))


def sample_depth_at(frame: DepthFrame, box: BoundingBox, window: int = DEFAULT_WINDOW) -> float | None:
    """Median of the nonzero raw depths in a window x window patch at the box center.

    The patch is centered on the unclamped center pixel and intersected with
    the image. Returns None when that intersection holds no valid sample.
    """
    _check_odd(window, "depth window")
    cu, cv = box.center
    col, row = int(math.floor(cu)), int(math.floor(cv))
    half = window // 2
    r0, r1 = max(row - half, 0), min(row + half + 1, frame.height)
    c0, c1 = max(col - half, 0), min(col + half + 1, frame.width)
    if r0 >= r1 or c0 >= c1:
        return None
    patch = frame.values[r0:r1, c0:c1]
    valid = patch[patch != 0]
    if valid.size == 0:
        return None
    return float(np.median(valid.astype(np.float64)))


def _pick(candidates: Iterable[Detection]) -> Detection | None:
    """Highest confidence; ties go to the larger box, then the lower x_min."""
    best = None
    for det in candidates:
        key = (det.score, det.box.area, -det.box.x_min)
        if best is None or key > best[0]:
            best = (key, det)
    return None if best is None else best[1]


def build_trajectory(
    frames: Iterable[DepthFrame],
    detections: DetectionSet | Mapping[int, Sequence[Detection]],
    hand: ObjectClass,
    intr: CameraIntrinsics,
    window: int = DEFAULT_WINDOW,
) -> Trajectory3D:
    """Deproject the best detection of ``hand`` in every frame.

    Frames without a detection of the hand, with a box outside the image or
    without valid depth around the box center become gaps.
    """
    _check_odd(window, "depth window")
    frame_list = list(frames)
    if not frame_list:
        raise EmptyInput("no depth frames")
    by_frame = detections.by_frame if isinstance(detections, DetectionSet) else detections
    present = {f.index for f in frame_list}
    stray = sorted(set(by_frame) - present)
    if stray:
        raise ValidationError(f"detections reference frames not in the sequence: {stray[:10]}")
    intr.check_image(frame_list[0].width, frame_list[0].height)

    sample_frames: list[int] = []
    us: list[float] = []
    vs: list[float] = []
    depths: list[float] = []
    gaps: list[int] = []
    for frame in sorted(frame_list, key=lambda f: f.index):
        det = _pick(d for d in by_frame.get(frame.index, ()) if d.class_id is hand)
        if det is None:
            gaps.append(frame.index)
            continue
        if det.box.clip(frame.width, frame.height) is None:
            logger.debug(f"{hand.value}: box outside image at frame {frame.index}")
            gaps.append(frame.index)
            continue
        depth = sample_depth_at(frame, det.box, window)
        if depth is None:
            logger.debug(f"{hand.value}: no valid depth at frame {frame.index}")
            gaps.append(frame.index)
            continue
        u, v = det.box.center
        sample_frames.append(frame.index)
        us.append(u)
        vs.append(v)
        depths.append(depth)

    positions = deproject_many(us, vs, depths, intr) if depths else np.empty((0, 3))
    if gaps:
        logger.debug(f"{hand.value}: {len(gaps)} of {len(frame_list)} frames are gaps")
    return Trajectory3D(hand, np.asarray(sample_frames, dtype=np.int64), positions, tuple(gaps))


def dump_trajectory(path: str | Path, trajectories: Iterable[Trajectory3D]) -> Path:
    """JSON Lines of ``{"frame", "hand", "xyz"}``; gaps are omitted."""
    path = Path(path)
    records = []
    for traj in trajectories:
        for frame, point in traj.samples:
            records.append((frame, traj.hand.value, list(point)))
    records.sort(key=lambda r: (r[0], r[1]))
    path.write_text(
        "".join(json.dumps({"frame": f, "hand": h, "xyz": xyz}) + "\n" for f, h, xyz in records),
        encoding="utf-8",
    )
    return path


def load_trajectory(path: str | Path, hand: ObjectClass, frame_count: int) -> Trajectory3D:
    """Read one hand back from a trajectory dump; absent frames become gaps."""
    path = Path(path)
    points: dict[int, list[float]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            if ObjectClass.parse(record["hand"]) is hand:
                points[int(record["frame"])] = [float(c) for c in record["xyz"]]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"bad trajectory record ({exc})", path, lineno)
    frames = sorted(f for f in points if 0 <= f < frame_count)
    gaps = tuple(sorted(set(range(frame_count)) - set(frames)))
    positions = np.array([points[f] for f in frames], dtype=np.float64).reshape(-1, 3)
    return Trajectory3D(hand, np.asarray(frames, dtype=np.int64), positions, gaps)
