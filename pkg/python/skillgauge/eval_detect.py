"""
Object-detection evaluation: per-class AP and mAP over IoU thresholds.

Matching is per frame and per class. Detections are visited in descending
confidence (ties keep input order); each one claims the unmatched ground-truth
box it overlaps most, provided the IoU reaches the threshold.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from .config import DEFAULT_IOU_THRESHOLDS, DetectionEvalConfig, Interpolation
from .errors import ValidationError
from .models import BoundingBox, Detection, DetectionSet, ObjectClass
from .report import to_csv

DEFAULT_CONFIDENCE_THRESHOLDS = DEFAULT_IOU_THRESHOLDS


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes in continuous coordinates."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def _as_list(items: DetectionSet | Iterable[Detection], class_id: ObjectClass) -> list[Detection]:
    return [d for d in items if d.class_id is class_id]


def _match(
    dets: list[Detection], gts: list[Detection], iou_t: float
) -> tuple[NDArray[np.bool_], NDArray[np.float64]]:
    """TP flags and scores of ``dets`` in visiting order."""
    order = sorted(dets, key=lambda d: -d.score)
    gt_by_frame: dict[int, list[Detection]] = {}
    for gt in gts:
        gt_by_frame.setdefault(gt.frame, []).append(gt)
    used: dict[int, list[bool]] = {f: [False] * len(v) for f, v in gt_by_frame.items()}

    flags = np.zeros(len(order), dtype=bool)
    for i, det in enumerate(order):
        candidates = gt_by_frame.get(det.frame, [])
        taken = used.get(det.frame, [])
        best_j, best_iou = -1, -1.0
        for j, gt in enumerate(candidates):
            if taken[j]:
                continue
            overlap = iou(det.box, gt.box)
            if overlap > best_iou:
                best_j, best_iou = j, overlap
        if best_j >= 0 and best_iou >= iou_t:
            taken[best_j] = True
            flags[i] = True
    scores = np.array([d.score for d in order], dtype=np.float64)
    return flags, scores


class PRCurve(NamedTuple):
    """Precision/recall after each detection in confidence order."""

    recall: NDArray[np.float64]
    precision: NDArray[np.float64]
    scores: NDArray[np.float64]
    gt_count: int


def precision_recall_curve(
    dets: DetectionSet | Iterable[Detection],
    gts: DetectionSet | Iterable[Detection],
    class_id: ObjectClass,
    iou_t: float,
) -> PRCurve:
    det_list = _as_list(dets, class_id)
    gt_list = _as_list(gts, class_id)
    flags, scores = _match(det_list, gt_list, iou_t)
    tp = np.cumsum(flags, dtype=np.float64)
    fp = np.cumsum(~flags, dtype=np.float64)
    n_gt = len(gt_list)
    recall = tp / n_gt if n_gt else np.zeros_like(tp)
    precision = tp / np.maximum(tp + fp, np.finfo(np.float64).eps)
    return PRCurve(recall, precision, scores, n_gt)


def _integrate(curve: PRCurve, interpolation: Interpolation) -> float:
    if curve.recall.size == 0:
        return 0.0
    if interpolation is Interpolation.POINTS_101:
        ap = 0.0
        for r in np.linspace(0.0, 1.0, 101):
            reached = curve.precision[curve.recall >= r]
            ap += float(reached.max()) if reached.size else 0.0
        return ap / 101.0

    mrec = np.concatenate(([0.0], curve.recall, [1.0]))
    mpre = np.concatenate(([0.0], curve.precision, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    i = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[i + 1] - mrec[i]) * mpre[i + 1]))


def average_precision(
    dets: DetectionSet | Iterable[Detection],
    gts: DetectionSet | Iterable[Detection],
    class_id: ObjectClass,
    iou_t: float,
    interpolation: Interpolation = Interpolation.ALL_POINTS,
) -> float | None:
    """Area under the precision envelope; None when the class has no ground truth."""
    curve = precision_recall_curve(dets, gts, class_id, iou_t)
    if curve.gt_count == 0:
        return None
    return _integrate(curve, interpolation)


@dataclass(frozen=True)
class ClassAP:
    class_id: ObjectClass
    occurrence: int
    ap: tuple[float | None, ...]

    @property
    def ap_50_95(self) -> float | None:
        if self.occurrence == 0:
            return None
        return float(np.mean(np.asarray(self.ap, dtype=np.float64)))


@dataclass(frozen=True)
class APTable:
    thresholds: tuple[float, ...]
    rows: tuple[ClassAP, ...] = field(default_factory=tuple)

    @property
    def map_50_95(self) -> float | None:
        """Unweighted mean over classes with at least one ground-truth box."""
        values = [r.ap_50_95 for r in self.rows if r.ap_50_95 is not None]
        if not values:
            return None
        return float(np.mean(values))

    def ap_at(self, class_id: ObjectClass, threshold: float) -> float | None:
        col = self._column(threshold)
        for row in self.rows:
            if row.class_id is class_id:
                return None if col is None else row.ap[col]
        raise KeyError(class_id)

    def _column(self, threshold: float) -> int | None:
        for i, t in enumerate(self.thresholds):
            if abs(t - threshold) < 1e-9:
                return i
        return None

    def _mean_at(self, threshold: float) -> float | None:
        col = self._column(threshold)
        if col is None:
            return None
        values = [r.ap[col] for r in self.rows if r.ap[col] is not None]
        return float(np.mean(values)) if values else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "thresholds": list(self.thresholds),
            "classes": [
                {
                    "class": r.class_id.value,
                    "occurrence": r.occurrence,
                    "ap": list(r.ap),
                    "ap_50_95": r.ap_50_95,
                }
                for r in self.rows
            ],
            "map_50_95": self.map_50_95,
        }

    def to_csv(self) -> str:
        """Rows of class, occurrence, AP_50, AP_75 and AP_50_95 plus an Average row."""
        rows: list[list[Any]] = []
        for r in self.rows:
            c50, c75 = self._column(0.50), self._column(0.75)
            rows.append(
                [
                    r.class_id.value,
                    r.occurrence,
                    None if c50 is None else r.ap[c50],
                    None if c75 is None else r.ap[c75],
                    r.ap_50_95,
                ]
            )
        rows.append(
            [
                "Average",
                sum(r.occurrence for r in self.rows),
                self._mean_at(0.50),
                self._mean_at(0.75),
                self.map_50_95,
            ]
        )
        return to_csv(("class", "occurrence", "AP_50", "AP_75", "AP_50_95"), rows)


def map_50_95(
    dets: DetectionSet | Sequence[Detection],
    gts: DetectionSet | Sequence[Detection],
    config: DetectionEvalConfig | None = None,
) -> APTable:
    """AP of every class at every IoU threshold, averaged into an APTable."""
    config = config or DetectionEvalConfig()
    det_list = list(dets)
    gt_list = list(gts)
    if not gt_list:
        raise ValidationError("ground truth contains no boxes")

    if config.classes is not None:
        classes = list(config.classes)
    else:
        present = {d.class_id for d in gt_list} | {d.class_id for d in det_list}
        classes = [c for c in ObjectClass if c in present]

    rows = []
    for class_id in classes:
        cls_dets = _as_list(det_list, class_id)
        cls_gts = _as_list(gt_list, class_id)
        aps = tuple(
            average_precision(cls_dets, cls_gts, class_id, t, config.interpolation)
            for t in config.iou_thresholds
        )
        if not cls_gts:
            logger.warning(f"{class_id.value}: no ground truth, excluded from mAP")
        rows.append(ClassAP(class_id, len(cls_gts), aps))
    return APTable(config.iou_thresholds, tuple(rows))


class SweepPoint(NamedTuple):
    threshold: float
    precision: float
    recall: float
    f1: float


def confidence_sweep(
    dets: DetectionSet | Iterable[Detection],
    gts: DetectionSet | Iterable[Detection],
    class_id: ObjectClass,
    iou_t: float = 0.5,
    thresholds: Sequence[float] = DEFAULT_CONFIDENCE_THRESHOLDS,
) -> list[SweepPoint]:
    """Precision, recall and F1 of the detections kept at each confidence cut."""
    det_list = _as_list(dets, class_id)
    gt_list = _as_list(gts, class_id)
    points = []
    for t in thresholds:
        kept = [d for d in det_list if d.score >= t]
        flags, _ = _match(kept, gt_list, iou_t)
        tp = int(flags.sum())
        precision = tp / len(kept) if kept else 0.0
        recall = tp / len(gt_list) if gt_list else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        points.append(SweepPoint(float(t), precision, recall, f1))
    return points
