"""
Temporal action-segmentation metrics: frame accuracy, segmental edit score and F1@k.

All scores are percentages in [0, 100]. Segments use inclusive frame
bounds, so a segment covering frames 0..49 is 50 frames long.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .config import SegmentationEvalConfig
from .errors import ValidationError
from .models import GestureLabel, LabelSequence
from .report import to_csv


@dataclass(frozen=True)
class Segment:
    label: GestureLabel
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end < self.start:
            raise ValidationError(f"invalid segment bounds [{self.start}, {self.end}]")

    @property
    def length(self) -> int:
        return self.end - self.start + 1


SegmentSequence = tuple[Segment, ...]


def to_segments(labels: LabelSequence | Sequence[GestureLabel]) -> SegmentSequence:
    """Run-length encode a label sequence into maximal segments."""
    seq = list(labels)
    if not seq:
        raise ValidationError("cannot segment an empty label sequence")
    segments = []
    start = 0
    for i in range(1, len(seq) + 1):
        if i == len(seq) or seq[i] is not seq[start]:
            segments.append(Segment(seq[start], start, i - 1))
            start = i
    return tuple(segments)


def from_segments(segments: Sequence[Segment]) -> list[GestureLabel]:
    out: list[GestureLabel] = []
    for seg in segments:
        out.extend([seg.label] * seg.length)
    return out


def _without_background(segments: Sequence[Segment]) -> list[Segment]:
    return [s for s in segments if not s.label.is_background]


def frame_accuracy(
    gt: LabelSequence | Sequence[GestureLabel],
    pred: LabelSequence | Sequence[GestureLabel],
    exclude_background: bool = False,
) -> float:
    """Percentage of frames whose predicted label equals the ground truth.

    With ``exclude_background`` frames labeled G6 in the ground truth are not
    counted; if no frame remains the score is 100.
    """
    correct, total = _frame_counts(gt, pred, exclude_background)
    if total == 0:
        return 100.0
    return 100.0 * correct / total


def _frame_counts(
    gt: LabelSequence | Sequence[GestureLabel],
    pred: LabelSequence | Sequence[GestureLabel],
    exclude_background: bool,
) -> tuple[int, int]:
    if len(gt) != len(pred):
        raise ValidationError(f"ground truth has {len(gt)} frames, prediction {len(pred)}")
    correct = total = 0
    for g, p in zip(gt, pred):
        if exclude_background and g.is_background:
            continue
        total += 1
        correct += g is p
    return correct, total


def levenshtein(a: Sequence[GestureLabel], b: Sequence[GestureLabel]) -> int:
    """Unit-cost edit distance."""
    m, n = len(a), len(b)
    d = np.zeros((m + 1, n + 1), dtype=np.int64)
    d[:, 0] = np.arange(m + 1)
    d[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            cost = 0 if a[i - 1] is b[j - 1] else 1
            d[i, j] = min(d[i - 1, j] + 1, d[i, j - 1] + 1, d[i - 1, j - 1] + cost)
    return int(d[m, n])


def edit_score(
    gt: Sequence[Segment], pred: Sequence[Segment], exclude_background: bool = False
) -> float:
    """``100 * (1 - distance / max(len))`` over segment label order; durations are ignored."""
    if exclude_background:
        gt, pred = _without_background(gt), _without_background(pred)
    a = [s.label for s in gt]
    b = [s.label for s in pred]
    longest = max(len(a), len(b))
    if longest == 0:
        return 100.0
    return 100.0 * (1.0 - levenshtein(a, b) / longest)


def _interval_overlap(a: Segment, b: Segment) -> tuple[int, int]:
    inter = max(0, min(a.end, b.end) - max(a.start, b.start) + 1)
    return inter, a.length + b.length - inter


class SegmentCounts(NamedTuple):
    tp: int
    fp: int
    fn: int

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 200.0 * self.tp / denom if denom else 0.0


def segment_counts(
    gt: Sequence[Segment],
    pred: Sequence[Segment],
    k: int,
    exclude_background: bool = False,
) -> SegmentCounts:
    """Greedy temporal-order matching at overlap ``k`` percent.

    Each prediction takes its highest-IoU same-label segment, matched or not;
    it is a true positive only when that segment is still free and the
    overlap reaches ``k``. The true-positive count is nonincreasing in ``k``.
    """
    if not (0 < k < 100):
        raise ValidationError(f"F1 overlap k={k} outside (0, 100)")
    if exclude_background:
        gt, pred = _without_background(gt), _without_background(pred)
    matched = [False] * len(gt)
    tp = fp = 0
    for p in sorted(pred, key=lambda s: s.start):
        best, best_ratio, best_counts = -1, -1.0, (0, 1)
        for j, g in enumerate(gt):
            if g.label is not p.label:
                continue
            inter, union = _interval_overlap(p, g)
            if inter / union > best_ratio:
                best, best_ratio, best_counts = j, inter / union, (inter, union)
        inter, union = best_counts
        if best >= 0 and not matched[best] and inter * 100 >= k * union:
            matched[best] = True
            tp += 1
        else:
            fp += 1
    return SegmentCounts(tp, fp, len(gt) - tp)


def f1_at_k(
    gt: Sequence[Segment],
    pred: Sequence[Segment],
    k: int,
    exclude_background: bool = False,
) -> float:
    """Segmental F1 in percent; 0 when there is nothing to match."""
    return segment_counts(gt, pred, k, exclude_background).f1


@dataclass(frozen=True)
class SegmentationScore:
    accuracy: float
    edit: float
    f1: dict[int, float]
    counts: dict[int, SegmentCounts] = field(default_factory=dict, repr=False)
    frames_correct: int = 0
    frames_total: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "edit": self.edit,
            "f1": {str(k): v for k, v in sorted(self.f1.items())},
        }


def score_video(
    gt: LabelSequence | Sequence[GestureLabel],
    pred: LabelSequence | Sequence[GestureLabel],
    config: SegmentationEvalConfig | None = None,
) -> SegmentationScore:
    config = config or SegmentationEvalConfig()
    correct, total = _frame_counts(gt, pred, config.exclude_background)
    gt_segs, pred_segs = to_segments(gt), to_segments(pred)
    counts = {k: segment_counts(gt_segs, pred_segs, k, config.exclude_background) for k in config.ks}
    return SegmentationScore(
        accuracy=100.0 * correct / total if total else 100.0,
        edit=edit_score(gt_segs, pred_segs, config.exclude_background),
        f1={k: c.f1 for k, c in counts.items()},
        counts=counts,
        frames_correct=correct,
        frames_total=total,
    )


@dataclass(frozen=True)
class SplitScore:
    """Per-video scores and their aggregates over a split."""

    videos: dict[str, SegmentationScore]
    ks: tuple[int, ...]

    @property
    def micro_f1(self) -> dict[int, float]:
        """F1 from TP/FP/FN pooled over all videos."""
        out = {}
        for k in self.ks:
            counts = [s.counts[k] for s in self.videos.values()]
            pooled = SegmentCounts(*(sum(c[i] for c in counts) for i in range(3)))
            out[k] = pooled.f1
        return out

    @property
    def macro_f1(self) -> dict[int, float]:
        return {k: float(np.mean([s.f1[k] for s in self.videos.values()])) for k in self.ks}

    @property
    def mean_edit(self) -> float:
        return float(np.mean([s.edit for s in self.videos.values()]))

    @property
    def accuracy(self) -> float:
        correct = sum(s.frames_correct for s in self.videos.values())
        total = sum(s.frames_total for s in self.videos.values())
        return 100.0 * correct / total if total else 100.0

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([s.accuracy for s in self.videos.values()]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "videos": {name: score.to_dict() for name, score in sorted(self.videos.items())},
            "micro": {
                "f1": {str(k): v for k, v in self.micro_f1.items()},
                "edit": self.mean_edit,
                "accuracy": self.accuracy,
            },
            "macro": {
                "f1": {str(k): v for k, v in self.macro_f1.items()},
                "edit": self.mean_edit,
                "accuracy": self.mean_accuracy,
            },
        }

    def to_csv(self) -> str:
        header = ["video", *(f"F1@{k}" for k in self.ks), "Edit", "Acc"]
        rows: list[list[Any]] = [
            [name, *(score.f1[k] for k in self.ks), score.edit, score.accuracy]
            for name, score in sorted(self.videos.items())
        ]
        micro, macro = self.micro_f1, self.macro_f1
        rows.append(["micro", *(micro[k] for k in self.ks), self.mean_edit, self.accuracy])
        rows.append(["macro", *(macro[k] for k in self.ks), self.mean_edit, self.mean_accuracy])
        return to_csv(header, rows)


def score_split(
    pairs: Mapping[str, tuple[LabelSequence, LabelSequence]]
    | Iterable[tuple[str, LabelSequence, LabelSequence]],
    config: SegmentationEvalConfig | None = None,
) -> SplitScore:
    """Score each (ground truth, prediction) pair of a split."""
    config = config or SegmentationEvalConfig()
    items = (
        [(name, gt, pred) for name, (gt, pred) in pairs.items()]
        if isinstance(pairs, Mapping)
        else list(pairs)
    )
    if not items:
        raise ValidationError("split contains no videos")
    videos: dict[str, SegmentationScore] = {}
    for name, gt, pred in items:
        if name in videos:
            raise ValidationError(f"duplicate video {name!r} in split")
        videos[name] = score_video(gt, pred, config)
    return SplitScore(videos, config.ks)
