"""
Manifest-level orchestration shared by the command line subcommands.

Participants are processed independently (optionally on a thread pool) and
always returned ordered by ``(task, participant, group)``, so reports do not
depend on scheduling.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any

from loguru import logger

from .config import AnalysisConfig
from .errors import ParticipantError, ValidationError
from .geometry import Trajectory3D, build_trajectory
from .ingest import load_depth_sequence, load_detections, load_intrinsics, load_labels
from .models import HANDS, CameraIntrinsics, Group, GroupManifest, LabelSequence, ManifestEntry, ObjectClass
from .report import to_csv
from .stats import DEFAULT_ALPHA, GroupComparison, compare_groups


@dataclass(frozen=True)
class ParticipantResult:
    entry: ManifestEntry
    intrinsics: CameraIntrinsics
    trajectories: dict[ObjectClass, Trajectory3D]
    frame_count: int
    fps_assumed: bool = False
    labels: LabelSequence | None = None

    @property
    def left(self) -> Trajectory3D:
        return self.trajectories[ObjectClass.LEFT_HAND]

    @property
    def right(self) -> Trajectory3D:
        return self.trajectories[ObjectClass.RIGHT_HAND]

    def header(self) -> dict[str, Any]:
        return {
            "participant": self.entry.participant_id,
            "group": self.entry.group.value,
            "task": self.entry.task,
            "frames": self.frame_count,
        }


def resolve_intrinsics(entry: ManifestEntry, default: CameraIntrinsics | None) -> CameraIntrinsics:
    """Per-entry intrinsics win over the command line default."""
    if entry.intrinsics is not None:
        return load_intrinsics(entry.intrinsics)
    if default is None:
        raise ValidationError("no intrinsics: pass --intrinsics or set 'intrinsics' in the manifest entry")
    return default


def analyze_participant(
    entry: ManifestEntry,
    config: AnalysisConfig,
    intrinsics: CameraIntrinsics | None = None,
    need_labels: bool = False,
) -> ParticipantResult:
    """Load one participant's inputs and build both hand trajectories."""
    if entry.depth_dir is None or entry.detections is None:
        raise ValidationError("entry needs 'depth' and 'detections' paths")
    if need_labels and entry.labels is None:
        raise ValidationError("entry needs a 'labels' path")

    intr = resolve_intrinsics(entry, intrinsics)
    seq = load_depth_sequence(entry.depth_dir)
    detections = load_detections(entry.detections)
    trajectories = {}
    for hand in HANDS:
        traj = build_trajectory(seq.frames, detections, hand, intr, config.window)
        if config.smoothing_window is not None:
            traj = traj.smoothed(config.smoothing_window)
        trajectories[hand] = traj

    labels = load_labels(entry.labels, entry.task_profile) if need_labels and entry.labels else None
    if labels is not None and len(labels) != len(seq):
        raise ValidationError(f"{entry.labels}: {len(labels)} labels for {len(seq)} depth frames")
    logger.debug(f"{entry.participant_id}: {len(seq)} frames analyzed")
    return ParticipantResult(entry, intr, trajectories, len(seq), seq.meta.fps_assumed, labels)


def _entry_order(entry: ManifestEntry) -> tuple[str, str, str]:
    return entry.key


def analyze_manifest(
    manifest: GroupManifest | Sequence[ManifestEntry],
    config: AnalysisConfig,
    intrinsics: CameraIntrinsics | None = None,
    need_labels: bool = False,
) -> list[ParticipantResult]:
    """Analyze every entry; any failure aborts the whole run.

    Raises:
        ParticipantError: naming every participant that failed, with the
            first failure as the cause.
    """
    entries = sorted(manifest, key=_entry_order)
    if not entries:
        raise ValidationError("manifest has no participants")

    def run(entry: ManifestEntry) -> ParticipantResult | BaseException:
        try:
            return analyze_participant(entry, config, intrinsics, need_labels)
        except Exception as exc:  # noqa: BLE001
            return exc

    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        outcomes = list(pool.map(run, entries))

    failures = [(e, o) for e, o in zip(entries, outcomes) if isinstance(o, BaseException)]
    for entry, exc in failures:
        logger.error(f"{entry.participant_id} ({entry.task}): {exc}")
    if failures:
        ids = ", ".join(e.participant_id for e, _ in failures)
        raise ParticipantError(ids, failures[0][1])
    return [o for o in outcomes if isinstance(o, ParticipantResult)]


def compare_by_task(
    results: Iterable[ParticipantResult],
    metric: str,
    value: Callable[[ParticipantResult], float | None],
    alpha: float = DEFAULT_ALPHA,
) -> list[GroupComparison]:
    """One expert-vs-resident comparison per task; None values are left out."""
    by_task: dict[str, dict[Group, list[float]]] = {}
    for result in results:
        v = value(result)
        if v is None:
            continue
        groups = by_task.setdefault(result.entry.task, {Group.EXPERT: [], Group.RESIDENT: []})
        groups[result.entry.group].append(float(v))

    comparisons = []
    for task in sorted(by_task):
        experts, residents = by_task[task][Group.EXPERT], by_task[task][Group.RESIDENT]
        if not experts or not residents:
            logger.warning(f"{task}/{metric}: needs both groups, skipping the rank-sum test")
            continue
        comparison = compare_groups(experts, residents, alpha, task, metric, allow_degenerate=True)
        if comparison.result is None:
            logger.warning(f"{task}/{metric}: {comparison.degenerate}, no rank-sum test")
        comparisons.append(comparison)
    return comparisons


def comparisons_csv(comparisons: Iterable[GroupComparison]) -> str:
    """Group table: mean and std per group, then the test result."""
    header = (
        "task",
        "metric",
        "expert_mean",
        "expert_std",
        "expert_n",
        "resident_mean",
        "resident_std",
        "resident_n",
        "u",
        "p",
        "method",
    )
    rows = [
        (
            c.task,
            c.metric,
            c.expert.mean,
            c.expert.std,
            c.expert.n,
            c.resident.mean,
            c.resident.std,
            c.resident.n,
            None if c.result is None else c.result.u_statistic,
            None if c.result is None else c.result.p_value,
            "degenerate" if c.result is None else c.result.method.value,
        )
        for c in comparisons
    ]
    return to_csv(header, rows)
