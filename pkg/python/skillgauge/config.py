"""
Analysis settings.

Each config is a frozen dataclass validated on construction; ``to_dict``
returns the echo written into report ``config`` blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .errors import ValidationError
from .models import ObjectClass
from .motion import GapPolicy

DEFAULT_IOU_THRESHOLDS = (0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95)
DEFAULT_KS = (10, 25, 50)


def _odd(value: int, name: str) -> None:
    if value < 1 or value % 2 == 0:
        raise ValidationError(f"{name} must be an odd integer >= 1, got {value}")


@dataclass(frozen=True)
class AnalysisConfig:
    gap_policy: GapPolicy = GapPolicy.BRIDGE
    window: int = 5
    smoothing_window: int | None = None
    jobs: int = 1
    fps_default: float = 30.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "gap_policy", GapPolicy.parse(self.gap_policy))
        _odd(self.window, "window")
        if self.smoothing_window is not None:
            _odd(self.smoothing_window, "smoothing window")
        if self.jobs < 1:
            raise ValidationError(f"jobs must be >= 1, got {self.jobs}")
        if not (math.isfinite(self.fps_default) and self.fps_default > 0):
            raise ValidationError(f"fps_default must be positive, got {self.fps_default}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "gap_policy": self.gap_policy.value,
            "window": self.window,
            "smoothing_window": self.smoothing_window,
        }


class Interpolation(Enum):
    """How the precision envelope is integrated into AP."""

    ALL_POINTS = "all-points"
    POINTS_101 = "101-point"


@dataclass(frozen=True)
class DetectionEvalConfig:
    iou_thresholds: tuple[float, ...] = DEFAULT_IOU_THRESHOLDS
    classes: tuple[ObjectClass, ...] | None = None
    interpolation: Interpolation = Interpolation.ALL_POINTS

    def __post_init__(self) -> None:
        thresholds = tuple(float(t) for t in self.iou_thresholds)
        if not thresholds:
            raise ValidationError("at least one IoU threshold is required")
        for t in thresholds:
            if not (0.0 < t <= 1.0):
                raise ValidationError(f"IoU threshold {t} outside (0, 1]")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValidationError(f"IoU thresholds must be strictly increasing: {list(thresholds)}")
        object.__setattr__(self, "iou_thresholds", thresholds)
        if self.classes is not None:
            classes = tuple(
                c if isinstance(c, ObjectClass) else _parse_class(c) for c in self.classes
            )
            if not classes:
                raise ValidationError("class filter is empty")
            object.__setattr__(self, "classes", tuple(dict.fromkeys(classes)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "iou_thresholds": list(self.iou_thresholds),
            "classes": None if self.classes is None else [c.value for c in self.classes],
            "interpolation": self.interpolation.value,
        }


def _parse_class(name: str) -> ObjectClass:
    # filters raise ValidationError (exit 2), never ParseError
    try:
        return ObjectClass.parse(name)
    except ValueError as exc:
        raise ValidationError(f"unknown class {name!r} in class filter") from exc


def parse_class_filter(text: str | None) -> tuple[ObjectClass, ...] | None:
    """``"Left Hand,Right Hand"`` -> classes; None or blank -> no filter."""
    if text is None or not text.strip():
        return None
    return tuple(_parse_class(part.strip()) for part in text.split(",") if part.strip())


@dataclass(frozen=True)
class SegmentationEvalConfig:
    ks: tuple[int, ...] = DEFAULT_KS
    exclude_background: bool = False

    def __post_init__(self) -> None:
        ks = tuple(int(k) for k in self.ks)
        if not ks:
            raise ValidationError("at least one F1 overlap threshold is required")
        for k in ks:
            if not (0 < k < 100):
                raise ValidationError(f"F1 overlap k={k} outside (0, 100)")
        object.__setattr__(self, "ks", tuple(sorted(set(ks))))

    def to_dict(self) -> dict[str, Any]:
        return {"ks": list(self.ks), "exclude_background": self.exclude_background}
