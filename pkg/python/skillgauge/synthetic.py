"""
Synthetic expert/resident cohorts for demos, tests and benchmarks.

Each participant's hands move on circles in front of the camera: experts on
small circles, residents on large, slightly noisy ones. Recordings are
rendered into real on-disk inputs (16-bit depth PGMs, detection and ground
truth JSONL, gesture labels) plus a manifest, so the whole pipeline runs on
them unchanged.

Example:
    >>> from skillgauge.synthetic import CohortOptions, generate_cohort
    >>> manifest = generate_cohort("cohort", CohortOptions(n_experts=4, n_residents=8))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from .errors import ValidationError
from .ingest import dump_detections, write_depth_sequence, write_intrinsics, write_labels, write_manifest
from .models import (
    BoundingBox,
    CameraIntrinsics,
    Detection,
    DetectionSet,
    GestureLabel,
    Group,
    ManifestEntry,
    ObjectClass,
)

WIDTH = 96
HEIGHT = 72
INTRINSICS = CameraIntrinsics(fx=80.0, fy=80.0, cx=48.0, cy=36.0, depth_scale=0.0001)
BACKGROUND_M = 1.5
HAND_DEPTH_M = 0.8
BOX_HALF = 3.0
PATCH_HALF = 3
HAND_CONFIDENCE = 0.9
TOOL_CONFIDENCE = 0.8
TOOL_BOX = BoundingBox(70.0, 50.0, 80.0, 60.0)
TOOL_PRED_BOX = BoundingBox(71.0, 50.0, 81.0, 60.0)

# gesture order and relative share of a recording
_SCRIPT = (
    (GestureLabel.G6, 1),
    (GestureLabel.G0, 2),
    (GestureLabel.G1, 2),
    (GestureLabel.G2, 2),
    (GestureLabel.G3, 2),
    (GestureLabel.G4, 1),
    (GestureLabel.G5, 1),
    (GestureLabel.G6, 1),
)

_HAND_CENTERS = {
    ObjectClass.LEFT_HAND: (-0.15, 0.0),
    ObjectClass.RIGHT_HAND: (0.15, 0.0),
}


@dataclass(frozen=True)
class CohortOptions:
    n_experts: int = 4
    n_residents: int = 8
    frames: int = 60
    task: str = "simple"
    seed: int = 7
    expert_radius: float = 0.03
    resident_radius: float = 0.08
    resident_noise: float = 0.002
    dropout_frames: tuple[int, ...] = (20,)
    # when set, both groups share one radius and residents only add
    # back-and-forth motion during this gesture
    differ_only: GestureLabel | None = None
    speedup: float = 3.0
    single_gesture: GestureLabel | None = None

    def __post_init__(self) -> None:
        if self.n_experts < 1 or self.n_residents < 1:
            raise ValidationError("a cohort needs at least one expert and one resident")
        if self.frames < len(_SCRIPT):
            raise ValidationError(f"need at least {len(_SCRIPT)} frames, got {self.frames}")


@dataclass(frozen=True)
class Participant:
    participant_id: str
    group: Group
    scale: float
    seed: int


def gesture_script(frames: int) -> list[GestureLabel]:
    """Frame labels following a fixed suturing order, split by relative share."""
    weights = np.array([w for _, w in _SCRIPT], dtype=np.float64)
    bounds = np.round(np.concatenate(([0.0], np.cumsum(weights))) / weights.sum() * frames).astype(int)
    labels: list[GestureLabel] = []
    for (label, _), lo, hi in zip(_SCRIPT, bounds[:-1], bounds[1:]):
        labels.extend([label] * int(hi - lo))
    return labels


def shifted_labels(labels: list[GestureLabel], shift: int = 1) -> list[GestureLabel]:
    """Predicted labels whose boundaries lag the ground truth by ``shift`` frames."""
    return [labels[max(0, i - shift)] for i in range(len(labels))]


def _roster(options: CohortOptions) -> list[Participant]:
    """Participants interleaved by group so per-participant scales alternate."""
    slots = [((j + 0.5) / options.n_experts, Group.EXPERT, j) for j in range(options.n_experts)]
    slots += [((j + 0.5) / options.n_residents, Group.RESIDENT, j) for j in range(options.n_residents)]
    slots.sort(key=lambda s: (s[0], s[1].value))
    roster = []
    for ordinal, (_, group, j) in enumerate(slots):
        prefix = "E" if group is Group.EXPERT else "R"
        roster.append(
            Participant(
                participant_id=f"{prefix}{j + 1:02d}",
                group=group,
                scale=1.0 + 0.013 * ordinal,
                seed=options.seed * 1000 + ordinal,
            )
        )
    return roster


def hand_positions(
    participant: Participant, hand: ObjectClass, labels: list[GestureLabel], options: CohortOptions
) -> NDArray[np.float64]:
    """Camera-space positions (frames, 3) of one hand."""
    frames = len(labels)
    resident = participant.group is Group.RESIDENT
    if options.differ_only is None:
        radius = options.resident_radius if resident else options.expert_radius
    else:
        radius = options.expert_radius
    radius *= participant.scale

    omega = np.full(frames, 2.0 * math.pi / frames)
    if options.differ_only is not None and resident:
        # alternating forward/backward steps; the phase after the gesture matches the experts'
        idx = np.flatnonzero([label is options.differ_only for label in labels])
        extra = (options.speedup - 1.0) * omega[idx]
        omega[idx] += np.where(np.arange(len(idx)) % 2 == 0, extra, -extra)
    theta = np.concatenate(([0.0], np.cumsum(omega[:-1])))
    if hand is ObjectClass.RIGHT_HAND:
        theta = theta + math.pi / 3.0

    cx, cy = _HAND_CENTERS[hand]
    positions = np.column_stack(
        (
            cx + radius * np.cos(theta),
            cy + radius * np.sin(theta),
            HAND_DEPTH_M + 0.5 * radius * np.sin(theta),
        )
    )
    if resident and options.differ_only is None and options.resident_noise > 0:
        rng = np.random.default_rng(participant.seed + (0 if hand is ObjectClass.LEFT_HAND else 1))
        positions += rng.normal(0.0, options.resident_noise, size=positions.shape)
    return positions


def _project(point: NDArray[np.float64]) -> tuple[float, float]:
    x, y, z = point
    return INTRINSICS.cx + INTRINSICS.fx * x / z, INTRINSICS.cy + INTRINSICS.fy * y / z


def render_frames(positions: dict[ObjectClass, NDArray[np.float64]]) -> list[NDArray[np.uint16]]:
    """Depth images with a flat background and a square depth patch per hand."""
    frames = len(next(iter(positions.values())))
    background = round(BACKGROUND_M / INTRINSICS.depth_scale)
    images = []
    for t in range(frames):
        img = np.full((HEIGHT, WIDTH), background, dtype=np.uint16)
        for traj in positions.values():
            u, v = _project(traj[t])
            col, row = int(math.floor(u)), int(math.floor(v))
            img[
                max(row - PATCH_HALF, 0) : row + PATCH_HALF + 1,
                max(col - PATCH_HALF, 0) : col + PATCH_HALF + 1,
            ] = round(traj[t][2] / INTRINSICS.depth_scale)
        images.append(img)
    return images


def detections_for(
    positions: dict[ObjectClass, NDArray[np.float64]],
    ground_truth: bool,
    dropout_frames: tuple[int, ...] = (),
) -> DetectionSet:
    dets = []
    frames = len(next(iter(positions.values())))
    for t in range(frames):
        for hand, traj in positions.items():
            if not ground_truth and hand is ObjectClass.LEFT_HAND and t in dropout_frames:
                continue
            u, v = _project(traj[t])
            box = BoundingBox(u - BOX_HALF, v - BOX_HALF, u + BOX_HALF, v + BOX_HALF)
            dets.append(Detection(t, hand, box, None if ground_truth else HAND_CONFIDENCE))
        if ground_truth:
            dets.append(Detection(t, ObjectClass.NEEDLE_DRIVER, TOOL_BOX))
        else:
            dets.append(Detection(t, ObjectClass.NEEDLE_DRIVER, TOOL_PRED_BOX, TOOL_CONFIDENCE))
    return DetectionSet.from_detections(dets, ground_truth=ground_truth)


def generate_cohort(root: str | Path, options: CohortOptions | None = None) -> Path:
    """Write a full cohort under ``root`` and return the manifest path."""
    options = options or CohortOptions()
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    intrinsics_path = write_intrinsics(root / "intrinsics.json", INTRINSICS)

    if options.single_gesture is not None:
        labels = [options.single_gesture] * options.frames
    else:
        labels = gesture_script(options.frames)

    entries = []
    for participant in _roster(options):
        base = root / participant.participant_id
        positions = {
            hand: hand_positions(participant, hand, labels, options) for hand in _HAND_CENTERS
        }
        write_depth_sequence(base / "depth", render_frames(positions), depth_scale=INTRINSICS.depth_scale)
        dump_detections(base / "detections.jsonl", detections_for(positions, False, options.dropout_frames))
        dump_detections(base / "ground_truth.jsonl", detections_for(positions, True))
        write_labels(base / "labels.txt", labels)
        write_labels(base / "labels_pred.txt", shifted_labels(labels))
        entries.append(
            ManifestEntry(
                participant_id=participant.participant_id,
                group=participant.group,
                task=options.task,
                depth_dir=base / "depth",
                detections=base / "detections.jsonl",
                labels=base / "labels.txt",
                intrinsics=intrinsics_path,
            )
        )

    manifest = write_manifest(root / "manifest.json", entries)
    logger.info(
        f"Generated {options.n_experts} experts and {options.n_residents} residents "
        f"({options.frames} frames each) under {root}"
    )
    return manifest
