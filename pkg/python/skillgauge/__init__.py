"""
skillgauge - hand-motion and model-evaluation analytics for depth-camera
recordings of suturing practice.

The package turns depth frames and hand detections into metric 3D hand
trajectories, measures path lengths (in 3D, in orthogonal planes and per
gesture), scores detection and action-segmentation models, and compares
expert and resident groups with the Wilcoxon rank-sum test.

Example:
    >>> import skillgauge as sg
    >>> intr = sg.CameraIntrinsics(fx=500, fy=500, cx=320, cy=240)
    >>> sg.deproject(820, 240, 1000, intr)
    Point3(x=1.0, y=0.0, z=1.0)
    >>> sg.rank_sum_test(
    ...     sg.SampleGroup.of("Expert", [1, 2, 3]),
    ...     sg.SampleGroup.of("Resident", [4, 5, 6]),
    ... ).p_value
    0.1

Logging is disabled for the library by default; call
:func:`skillgauge.logs.configure_logging` (the command line does) to see it.
"""

from loguru import logger

from .config import AnalysisConfig, DetectionEvalConfig, Interpolation, SegmentationEvalConfig
from .errors import (
    DegenerateError,
    EmptyInput,
    FormatError,
    GapError,
    InvalidDepth,
    ParseError,
    ParticipantError,
    ProfileError,
    SkillGaugeError,
    ValidationError,
)
from .eval_detect import APTable, ClassAP, average_precision, confidence_sweep, iou, map_50_95, precision_recall_curve
from .eval_segment import (
    Segment,
    SegmentationScore,
    SplitScore,
    edit_score,
    f1_at_k,
    frame_accuracy,
    score_split,
    score_video,
    segment_counts,
    to_segments,
)
from .geometry import Point3, Trajectory3D, build_trajectory, deproject, deproject_many, sample_depth_at
from .ingest import load_depth_sequence, load_detections, load_intrinsics, load_labels, load_manifest
from .models import (
    BoundingBox,
    CameraIntrinsics,
    DepthFrame,
    DepthSequence,
    Detection,
    DetectionSet,
    GestureLabel,
    Group,
    GroupManifest,
    LabelSequence,
    ManifestEntry,
    ObjectClass,
    TaskProfile,
)
from .motion import (
    GapPolicy,
    GestureDistanceReport,
    HandPath,
    PathReport,
    gesture_distances,
    path_length_3d,
    path_report,
    planar_lengths,
    projection_loss,
    view_angle_lengths,
)
from .report import MetricReport
from .stats import GroupComparison, SampleGroup, TestMethod, TestResult, compare_groups, describe, rank_sum_test
from .viz import GrayscaleMapping, auto_mapping, depth_to_gray

__version__ = "0.1.0"

logger.disable("skillgauge")

__all__ = [
    # errors
    "SkillGaugeError",
    "ParseError",
    "FormatError",
    "GapError",
    "ValidationError",
    "ProfileError",
    "InvalidDepth",
    "EmptyInput",
    "DegenerateError",
    "ParticipantError",
    # models and config
    "BoundingBox",
    "CameraIntrinsics",
    "DepthFrame",
    "DepthSequence",
    "Detection",
    "DetectionSet",
    "GestureLabel",
    "Group",
    "GroupManifest",
    "LabelSequence",
    "ManifestEntry",
    "ObjectClass",
    "TaskProfile",
    "AnalysisConfig",
    "DetectionEvalConfig",
    "Interpolation",
    "SegmentationEvalConfig",
    # ingest
    "load_depth_sequence",
    "load_detections",
    "load_intrinsics",
    "load_labels",
    "load_manifest",
    # geometry
    "Point3",
    "Trajectory3D",
    "deproject",
    "deproject_many",
    "sample_depth_at",
    "build_trajectory",
    # motion
    "GapPolicy",
    "HandPath",
    "PathReport",
    "GestureDistanceReport",
    "path_length_3d",
    "planar_lengths",
    "path_report",
    "gesture_distances",
    "projection_loss",
    "view_angle_lengths",
    # detection
    "APTable",
    "ClassAP",
    "iou",
    "average_precision",
    "precision_recall_curve",
    "map_50_95",
    "confidence_sweep",
    # segmentation
    "Segment",
    "SegmentationScore",
    "SplitScore",
    "to_segments",
    "frame_accuracy",
    "edit_score",
    "f1_at_k",
    "segment_counts",
    "score_video",
    "score_split",
    # stats
    "SampleGroup",
    "TestMethod",
    "TestResult",
    "GroupComparison",
    "rank_sum_test",
    "describe",
    "compare_groups",
    # viz and reports
    "GrayscaleMapping",
    "depth_to_gray",
    "auto_mapping",
    "MetricReport",
    "__version__",
]
