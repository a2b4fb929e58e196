"""
Hand path length analytics.

Lengths are sums of Euclidean step distances between consecutive valid
samples, reduced strictly in frame order (``np.add.accumulate``) so results
are bit-reproducible. A step that jumps over gap frames is a *bridged* step:
counted under :attr:`GapPolicy.BRIDGE`, dropped under :attr:`GapPolicy.SKIP`.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation

from .errors import EmptyInput, ValidationError
from .geometry import Trajectory3D
from .models import GestureLabel, LabelSequence, ObjectClass


class GapPolicy(Enum):
    BRIDGE = "bridge"
    SKIP = "skip"

    @classmethod
    def parse(cls, name: str | GapPolicy) -> GapPolicy:
        if isinstance(name, GapPolicy):
            return name
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValidationError(f"unknown gap policy {name!r}, expected bridge or skip")


class Plane(Enum):
    XY = "xy"
    YZ = "yz"
    XZ = "xz"

    @property
    def mask(self) -> tuple[float, float, float]:
        return _PLANE_MASKS[self]


_PLANE_MASKS = {
    Plane.XY: (1.0, 1.0, 0.0),
    Plane.YZ: (0.0, 1.0, 1.0),
    Plane.XZ: (1.0, 0.0, 1.0),
}
_FULL = (1.0, 1.0, 1.0)


class _Steps(NamedTuple):
    distances: NDArray[np.float64]
    start_frames: NDArray[np.int64]
    bridged: NDArray[np.bool_]


def _steps(traj: Trajectory3D, mask: tuple[float, float, float] = _FULL) -> _Steps:
    """Per-step distances with masked-out coordinates contributing exactly zero."""
    if len(traj.frames) == 0:
        raise EmptyInput(f"{traj.hand.value} trajectory has no samples")
    diffs = np.diff(traj.positions, axis=0)
    sq = diffs * diffs
    distances = np.sqrt(sq[:, 0] * mask[0] + sq[:, 1] * mask[1] + sq[:, 2] * mask[2])
    bridged = np.diff(traj.frames) > 1
    return _Steps(distances, traj.frames[:-1], bridged)


def _ordered_sum(values: NDArray[np.float64]) -> float:
    if values.size == 0:
        return 0.0
    return float(np.add.accumulate(values)[-1])


def _counted(steps: _Steps, gap_policy: GapPolicy) -> NDArray[np.bool_]:
    if gap_policy is GapPolicy.BRIDGE:
        return np.ones(steps.bridged.shape, dtype=bool)
    return ~steps.bridged


def path_length_3d(traj: Trajectory3D, gap_policy: GapPolicy = GapPolicy.BRIDGE) -> float:
    """Total 3D path length in meters."""
    steps = _steps(traj)
    return _ordered_sum(steps.distances[_counted(steps, gap_policy)])


def bridged_distance(traj: Trajectory3D) -> float:
    """Distance the Bridge policy adds across gaps."""
    steps = _steps(traj)
    return _ordered_sum(steps.distances[steps.bridged])


class PlanarLengths(NamedTuple):
    xy: float
    yz: float
    xz: float

    def get(self, plane: Plane) -> float:
        return float(getattr(self, plane.value))


def planar_lengths(traj: Trajectory3D, gap_policy: GapPolicy = GapPolicy.BRIDGE) -> PlanarLengths:
    """Path length after dropping one coordinate, for each orthogonal plane."""
    values = []
    for plane in Plane:
        steps = _steps(traj, plane.mask)
        values.append(_ordered_sum(steps.distances[_counted(steps, gap_policy)]))
    return PlanarLengths(*values)


@dataclass(frozen=True)
class HandPath:
    """Path metrics of one hand (or the two-hand sum)."""

    length_3d: float = 0.0
    length_xy: float = 0.0
    length_yz: float = 0.0
    length_xz: float = 0.0
    frames_used: int = 0
    gap_count: int = 0
    gap_bridged_distance: float = 0.0
    missing: bool = False

    def __add__(self, other: HandPath) -> HandPath:
        return HandPath(
            length_3d=self.length_3d + other.length_3d,
            length_xy=self.length_xy + other.length_xy,
            length_yz=self.length_yz + other.length_yz,
            length_xz=self.length_xz + other.length_xz,
            frames_used=self.frames_used + other.frames_used,
            gap_count=self.gap_count + other.gap_count,
            gap_bridged_distance=self.gap_bridged_distance + other.gap_bridged_distance,
            missing=self.missing or other.missing,
        )

    def plane(self, plane: Plane) -> float:
        return float(getattr(self, f"length_{plane.value}"))

    def observed(self, name: str = "length_3d") -> float | None:
        """A metric as a group observation; None when a hand had no samples."""
        return None if self.missing else float(getattr(self, name))

    def to_dict(self) -> dict[str, Any]:
        return {
            "length_3d": self.length_3d,
            "length_xy": self.length_xy,
            "length_yz": self.length_yz,
            "length_xz": self.length_xz,
            "frames_used": self.frames_used,
            "gap_count": self.gap_count,
            "gap_bridged_distance": self.gap_bridged_distance,
            "missing": self.missing,
        }


def hand_path(traj: Trajectory3D, gap_policy: GapPolicy = GapPolicy.BRIDGE) -> HandPath:
    """All path metrics of one trajectory; a trajectory without samples is flagged missing."""
    if len(traj.frames) == 0:
        return HandPath(gap_count=len(traj.gaps), missing=True)
    planes = planar_lengths(traj, gap_policy)
    return HandPath(
        length_3d=path_length_3d(traj, gap_policy),
        length_xy=planes.xy,
        length_yz=planes.yz,
        length_xz=planes.xz,
        frames_used=len(traj.frames),
        gap_count=len(traj.gaps),
        gap_bridged_distance=bridged_distance(traj),
    )


@dataclass(frozen=True)
class PathReport:
    """Per-hand and combined (left + right) path metrics."""

    left: HandPath
    right: HandPath
    gap_policy: GapPolicy = GapPolicy.BRIDGE

    @property
    def combined(self) -> HandPath:
        return self.left + self.right

    def to_dict(self) -> dict[str, Any]:
        return {
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
            "combined": self.combined.to_dict(),
        }


def path_report(
    left: Trajectory3D, right: Trajectory3D, gap_policy: GapPolicy = GapPolicy.BRIDGE
) -> PathReport:
    return PathReport(hand_path(left, gap_policy), hand_path(right, gap_policy), gap_policy)


def projection_loss(path: HandPath) -> dict[str, float]:
    """Fraction of the 3D length lost by each planar projection."""
    if path.length_3d == 0:
        return {plane.value: 0.0 for plane in Plane}
    return {plane.value: 1.0 - path.plane(plane) / path.length_3d for plane in Plane}


# ---------------------------------------------------------------------------
# Gesture distance
# ---------------------------------------------------------------------------


class GestureDistance(NamedTuple):
    distance: float
    step_count: int


@dataclass(frozen=True)
class GestureDistanceReport:
    """Distance per gesture, per hand and combined."""

    per_hand: dict[ObjectClass, dict[GestureLabel, GestureDistance]] = field(default_factory=dict)

    @property
    def combined(self) -> dict[GestureLabel, GestureDistance]:
        totals: dict[GestureLabel, GestureDistance] = {}
        for hand in sorted(self.per_hand, key=lambda h: h.value):
            for label, gd in self.per_hand[hand].items():
                prev = totals.get(label, GestureDistance(0.0, 0))
                totals[label] = GestureDistance(prev.distance + gd.distance, prev.step_count + gd.step_count)
        return dict(sorted(totals.items(), key=lambda kv: kv[0].value))

    @property
    def labels(self) -> tuple[GestureLabel, ...]:
        return tuple(self.combined)

    def to_dict(self) -> dict[str, Any]:
        def rows(table: dict[GestureLabel, GestureDistance]) -> dict[str, Any]:
            return {
                label.value: {"distance": gd.distance, "steps": gd.step_count}
                for label, gd in sorted(table.items(), key=lambda kv: kv[0].value)
            }

        out = {hand.value: rows(table) for hand, table in self.per_hand.items()}
        out["combined"] = rows(self.combined)
        return out


def gesture_distances(
    traj: Trajectory3D,
    labels: LabelSequence | Sequence[GestureLabel],
    gap_policy: GapPolicy = GapPolicy.BRIDGE,
) -> dict[GestureLabel, GestureDistance]:
    """Attribute every counted step t -> t+1 to the gesture at frame t.

    Bridged steps go to the label of the last valid frame before the gap.
    Every gesture present in ``labels`` appears in the result, possibly with
    zero distance.
    """
    if len(labels) != traj.frame_count:
        raise ValidationError(
            f"{len(labels)} labels for a {traj.frame_count}-frame sequence"
        )
    seq = list(labels)
    first = traj.first_frame
    totals: dict[GestureLabel, list[float]] = {label: [] for label in sorted(set(seq), key=lambda g: g.value)}
    if len(traj.frames) > 1:
        steps = _steps(traj)
        counted = _counted(steps, gap_policy)
        for distance, start, keep in zip(steps.distances, steps.start_frames, counted):
            if keep:
                totals[seq[int(start) - first]].append(float(distance))
    return {
        label: GestureDistance(_ordered_sum(np.asarray(values, dtype=np.float64)), len(values))
        for label, values in totals.items()
    }


def gesture_report(
    trajectories: Iterable[Trajectory3D],
    labels: LabelSequence | Sequence[GestureLabel],
    gap_policy: GapPolicy = GapPolicy.BRIDGE,
) -> GestureDistanceReport:
    """Gesture distances of several hands; hands without samples contribute zeros."""
    per_hand: dict[ObjectClass, dict[GestureLabel, GestureDistance]] = {}
    for traj in trajectories:
        if len(labels) != traj.frame_count:
            raise ValidationError(f"{len(labels)} labels for a {traj.frame_count}-frame sequence")
        if len(traj.frames) == 0:
            per_hand[traj.hand] = {g: GestureDistance(0.0, 0) for g in sorted(set(labels), key=lambda g: g.value)}
        else:
            per_hand[traj.hand] = gesture_distances(traj, labels, gap_policy)
    return GestureDistanceReport(per_hand)


# ---------------------------------------------------------------------------
# Camera angle
# ---------------------------------------------------------------------------


class ViewAngleResult(NamedTuple):
    tilt_degrees: float
    length_3d: float
    length_image_plane: float

    @property
    def ratio(self) -> float:
        return self.length_image_plane / self.length_3d if self.length_3d else 1.0


def view_angle_lengths(
    traj: Trajectory3D,
    tilt_degrees: Iterable[float],
    gap_policy: GapPolicy = GapPolicy.BRIDGE,
) -> list[ViewAngleResult]:
    """Image-plane (XY) length seen by a camera tilted about its x axis.

    The 3D length is invariant under the rotation; the image-plane length is
    what a 2D camera at that tilt would measure.
    """
    results = []
    for tilt in tilt_degrees:
        rotated = Rotation.from_euler("x", float(tilt), degrees=True).apply(traj.positions)
        view = Trajectory3D(traj.hand, traj.frames, rotated, traj.gaps)
        results.append(
            ViewAngleResult(
                float(tilt),
                path_length_3d(view, gap_policy),
                planar_lengths(view, gap_policy).xy,
            )
        )
    return results
