"""
Validated domain values produced by :mod:`skillgauge.ingest`.

All values are immutable; array-backed values keep read-only arrays so they
can be shared between threads.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import ParseError, ProfileError, ValidationError


class ObjectClass(Enum):
    """Detector classes; values are the serialized names."""

    LEFT_HAND = "Left Hand"
    RIGHT_HAND = "Right Hand"
    NEEDLE_DRIVER = "Needle Driver"
    TISSUE_FORCEPS = "Tissue Forceps"
    DRESSING_FORCEPS = "Dressing Forceps"
    SCISSORS = "Scissors"
    SIMULATOR = "Simulator"

    @classmethod
    def parse(cls, name: str) -> ObjectClass:
        """Accept the serialized name (``"Left Hand"``), ``LeftHand`` or ``LEFT_HAND``."""
        key = name.strip()
        for member in cls:
            if key in (member.value, member.name, member.value.replace(" ", "")):
                return member
        raise ParseError(f"unknown class {name!r}")

    @property
    def is_hand(self) -> bool:
        return self in (ObjectClass.LEFT_HAND, ObjectClass.RIGHT_HAND)


HANDS = (ObjectClass.LEFT_HAND, ObjectClass.RIGHT_HAND)


class GestureLabel(Enum):
    """Frame-wise suturing gestures."""

    G0 = "G0"
    G1 = "G1"
    G2 = "G2"
    G3 = "G3"
    G4 = "G4"
    G5 = "G5"
    G6 = "G6"
    G7 = "G7"

    @property
    def display_name(self) -> str:
        return _GESTURE_NAMES[self]

    @property
    def is_background(self) -> bool:
        return self is GestureLabel.G6

    @classmethod
    def parse(cls, token: str) -> GestureLabel:
        try:
            return cls(token.strip())
        except ValueError:
            raise ParseError(f"unknown gesture label {token!r}")


_GESTURE_NAMES = {
    GestureLabel.G0: "Holding needle with a tool",
    GestureLabel.G1: "Needle passing",
    GestureLabel.G2: "Pull the suture",
    GestureLabel.G3: "Instrumental tie",
    GestureLabel.G4: "Lay the knot",
    GestureLabel.G5: "Cut the suture",
    GestureLabel.G6: "No gesture",
    GestureLabel.G7: "Hand tie",
}

BACKGROUND = GestureLabel.G6


class TaskProfile(Enum):
    """Label catalog of a simulator."""

    SUTURE_PAD = "suture-pad"
    FASCIA = "fascia"

    @property
    def labels(self) -> tuple[GestureLabel, ...]:
        if self is TaskProfile.FASCIA:
            return tuple(GestureLabel)
        return tuple(g for g in GestureLabel if g is not GestureLabel.G7)

    def allows(self, label: GestureLabel) -> bool:
        return label in self.labels

    @classmethod
    def parse(cls, name: str) -> TaskProfile:
        key = name.strip().lower().replace("_", "-")
        for member in cls:
            if key == member.value:
                return member
        raise ValidationError(f"unknown task profile {name!r}")


# Tasks recorded on each simulator.
TASK_PROFILES: Mapping[str, TaskProfile] = {
    "simple": TaskProfile.SUTURE_PAD,
    "horizontal_mattress": TaskProfile.SUTURE_PAD,
    "vertical_mattress": TaskProfile.SUTURE_PAD,
    "running": TaskProfile.SUTURE_PAD,
    "fascia": TaskProfile.FASCIA,
}


def profile_for_task(task_id: str) -> TaskProfile:
    """Profile of a known task id; unknown tasks fall back to the suture pad."""
    return TASK_PROFILES.get(task_id, TaskProfile.SUTURE_PAD)


class Group(Enum):
    EXPERT = "Expert"
    RESIDENT = "Resident"

    @classmethod
    def parse(cls, name: str) -> Group:
        key = name.strip().lower()
        for member in cls:
            if key == member.value.lower():
                return member
        raise ValidationError(f"unknown group {name!r}, expected Expert or Resident")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels plus the meters-per-unit depth scale."""

    fx: float
    fy: float
    cx: float
    cy: float
    depth_scale: float = 0.001

    def __post_init__(self) -> None:
        for name in ("fx", "fy", "cx", "cy", "depth_scale"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"intrinsics {name} must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise ValidationError("focal lengths fx and fy must be positive")
        if self.depth_scale <= 0:
            raise ValidationError("depth_scale must be positive")

    def check_image(self, width: int, height: int) -> None:
        """Principal point must lie inside the image."""
        if not (0 <= self.cx < width and 0 <= self.cy < height):
            raise ValidationError(
                f"principal point ({self.cx}, {self.cy}) outside {width}x{height} image"
            )

    def to_dict(self) -> dict[str, float]:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "depth_scale": self.depth_scale,
        }


@dataclass(frozen=True)
class DepthMeta:
    """Contents of a depth sequence's ``meta.json``."""

    width: int
    height: int
    fps: float
    depth_scale: float
    fps_assumed: bool = False

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValidationError("meta width and height must be positive")
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise ValidationError("meta fps must be positive")
        if not (self.depth_scale > 0 and math.isfinite(self.depth_scale)):
            raise ValidationError("meta depth_scale must be positive")


@dataclass(frozen=True, eq=False)
class DepthFrame:
    """One 16-bit depth image; ``values[row, col]`` in device units, 0 = invalid."""

    index: int
    values: NDArray[np.uint16]
    timestamp: float | None = None

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise ValidationError("depth values must be a 2-D array")
        if self.values.dtype != np.uint16:
            object.__setattr__(self, "values", self.values.astype(np.uint16))
        if self.values.flags.writeable:
            frozen = self.values.copy()
            frozen.setflags(write=False)
            object.__setattr__(self, "values", frozen)

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def valid_mask(self) -> NDArray[np.bool_]:
        return self.values != 0


@dataclass(frozen=True)
class DepthSequence:
    """Frames of one recording in ascending index order."""

    meta: DepthMeta
    frames: tuple[DepthFrame, ...]

    def __iter__(self) -> Iterator[DepthFrame]:
        return iter(self.frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __getitem__(self, i: int) -> DepthFrame:
        return self.frames[i]

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(f.index for f in self.frames)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in continuous pixel coordinates, origin top-left."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValidationError(f"box coordinates must be finite: {list(coords)}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(f"inverted or empty box: {list(coords)}")

    @classmethod
    def from_list(cls, values: Sequence[float]) -> BoundingBox:
        if len(values) != 4:
            raise ValidationError(f"bbox needs 4 values, got {len(values)}")
        return cls(*(float(v) for v in values))

    def to_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def intersects_image(self, width: int, height: int) -> bool:
        return self.x_max > 0 and self.y_max > 0 and self.x_min < width and self.y_min < height

    def clip(self, width: int, height: int) -> BoundingBox | None:
        """The part of the box inside a width x height image, or None if nothing remains."""
        if not self.intersects_image(width, height):
            return None
        return BoundingBox(
            max(self.x_min, 0.0),
            max(self.y_min, 0.0),
            min(self.x_max, float(width)),
            min(self.y_max, float(height)),
        )


@dataclass(frozen=True)
class Detection:
    """A labeled box in one frame; ground truth carries no confidence."""

    frame: int
    class_id: ObjectClass
    box: BoundingBox
    confidence: float | None = None

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise ValidationError(f"frame index must be non-negative, got {self.frame}")
        if self.confidence is not None and not (0.0 <= self.confidence <= 1.0):
            raise ValidationError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def score(self) -> float:
        return 1.0 if self.confidence is None else self.confidence


@dataclass(frozen=True)
class DetectionSet:
    """Detections (or ground truth) grouped by frame index."""

    by_frame: Mapping[int, tuple[Detection, ...]]
    ground_truth: bool = False

    def __iter__(self) -> Iterator[Detection]:
        for frame in sorted(self.by_frame):
            yield from self.by_frame[frame]

    def __len__(self) -> int:
        return sum(len(d) for d in self.by_frame.values())

    @property
    def frames(self) -> tuple[int, ...]:
        return tuple(sorted(self.by_frame))

    def for_frame(self, frame: int) -> tuple[Detection, ...]:
        return self.by_frame.get(frame, ())

    def of_class(self, class_id: ObjectClass) -> list[Detection]:
        return [d for d in self if d.class_id is class_id]

    def classes(self) -> set[ObjectClass]:
        return {d.class_id for d in self}

    @classmethod
    def from_detections(
        cls, detections: Sequence[Detection], ground_truth: bool = False
    ) -> DetectionSet:
        grouped: dict[int, list[Detection]] = {}
        for det in detections:
            grouped.setdefault(det.frame, []).append(det)
        return cls({k: tuple(v) for k, v in sorted(grouped.items())}, ground_truth)


@dataclass(frozen=True)
class LabelSequence:
    """One gesture label per frame."""

    labels: tuple[GestureLabel, ...]
    profile: TaskProfile = TaskProfile.SUTURE_PAD

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValidationError("label sequence is empty")
        for i, label in enumerate(self.labels):
            if not self.profile.allows(label):
                raise ProfileError(
                    f"label {label.value} at frame {i} not allowed by profile {self.profile.value}"
                )

    @classmethod
    def of(cls, tokens: Sequence[str | GestureLabel], profile: TaskProfile = TaskProfile.SUTURE_PAD) -> LabelSequence:
        labels = tuple(t if isinstance(t, GestureLabel) else GestureLabel.parse(t) for t in tokens)
        return cls(labels, profile)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[GestureLabel]:
        return iter(self.labels)

    def __getitem__(self, i: int) -> GestureLabel:
        return self.labels[i]


@dataclass(frozen=True)
class ManifestEntry:
    participant_id: str
    group: Group
    task: str
    depth_dir: Path | None = None
    detections: Path | None = None
    labels: Path | None = None
    intrinsics: Path | None = None
    profile: TaskProfile | None = None

    @property
    def task_profile(self) -> TaskProfile:
        return self.profile if self.profile is not None else profile_for_task(self.task)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.task, self.participant_id, self.group.value)


@dataclass(frozen=True)
class GroupManifest:
    entries: tuple[ManifestEntry, ...]
    root: Path = field(default_factory=Path)

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def tasks(self) -> tuple[str, ...]:
        return tuple(sorted({e.task for e in self.entries}))
