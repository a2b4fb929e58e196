"""
Command line entry point.

Every analysis subcommand writes one JSON report (and optionally a CSV next
to it) and prints only the report path on stdout. Diagnostics go to stderr
through loguru; the level comes from ``SKILLGAUGE_LOG``.

Exit codes: 0 success, 2 parse/validation errors, 3 degenerate statistics,
1 anything unexpected.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from loguru import logger

from . import __version__
from .analysis import ParticipantResult, analyze_manifest, compare_by_task, comparisons_csv
from .config import AnalysisConfig, DetectionEvalConfig, Interpolation, SegmentationEvalConfig, parse_class_filter
from .errors import SkillGaugeError, ValidationError
from .eval_detect import confidence_sweep, map_50_95
from .eval_segment import score_split, score_video
from .ingest import load_detections, load_group_values, load_intrinsics, load_labels, load_manifest
from .logs import configure_logging
from .models import HANDS, CameraIntrinsics, GestureLabel, TaskProfile
from .motion import GapPolicy, Plane, gesture_report, path_report, projection_loss, view_angle_lengths
from .report import MetricReport, write_text_atomic
from .stats import DEFAULT_ALPHA, compare_groups
from .synthetic import CohortOptions, generate_cohort
from .viz import GrayscaleMapping, convert_sequence

Handler = Callable[[argparse.Namespace], Path]


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--intrinsics", type=Path, help="intrinsics.json used when an entry names none")
    common.add_argument(
        "--gap-policy",
        choices=[p.value for p in GapPolicy],
        default=GapPolicy.BRIDGE.value,
        help="how frames without a hand position contribute (default: bridge)",
    )
    common.add_argument("--window", type=_positive_int, default=5, help="odd depth sampling window in pixels")
    common.add_argument("--smoothing", type=_positive_int, default=None, help="odd moving-average window in samples")
    common.add_argument("--jobs", type=_positive_int, default=1, help="participants processed concurrently")
    common.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="significance level")
    common.add_argument("--out", type=Path, default=None, help="report path")
    common.add_argument("--csv", action="store_true", help="also write a CSV table next to the report")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="skillgauge",
        description="Hand-motion and model-evaluation analytics for depth-camera suturing recordings",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("path3d", parents=[common], help="3D hand path length per participant")
    p.add_argument("manifest", type=Path)
    p.set_defaults(handler=cmd_path3d)

    p = sub.add_parser("gesture-dist", parents=[common], help="hand distance per gesture")
    p.add_argument("manifest", type=Path)
    p.set_defaults(handler=cmd_gesture_dist)

    p = sub.add_parser("project2d", parents=[common], help="path length in the XY, YZ and XZ planes")
    p.add_argument("manifest", type=Path)
    p.add_argument("--tilts", type=_float_list, default=None, help="camera tilts in degrees, e.g. 0,15,30,45")
    p.set_defaults(handler=cmd_project2d)

    p = sub.add_parser("eval-detect", parents=[common], help="per-class AP and mAP50-95")
    p.add_argument("predictions", type=Path)
    p.add_argument("ground_truth", type=Path)
    p.add_argument("--classes", default=None, help='class filter, e.g. "Left Hand,Right Hand"')
    p.add_argument(
        "--interpolation",
        choices=[i.value for i in Interpolation],
        default=Interpolation.ALL_POINTS.value,
    )
    p.add_argument(
        "--sweep",
        type=float,
        default=None,
        metavar="IOU",
        help="also report precision, recall and F1 at confidence cuts 0.50..0.95 for this IoU",
    )
    p.set_defaults(handler=cmd_eval_detect)

    p = sub.add_parser("eval-segment", parents=[common], help="accuracy, edit score and F1@k")
    p.add_argument("predictions", type=Path, help="label file, or a directory of label files")
    p.add_argument("ground_truth", type=Path, help="label file, or a directory of label files")
    p.add_argument("--exclude-background", action="store_true", help="leave G6 out of every metric")
    p.add_argument(
        "--profile",
        choices=[t.value for t in TaskProfile],
        default=TaskProfile.FASCIA.value,
        help="label catalog accepted in the files",
    )
    p.set_defaults(handler=cmd_eval_segment)

    p = sub.add_parser("compare", parents=[common], help="rank-sum test over two value lists")
    p.add_argument("--input", type=Path, default=None, help='JSON {"expert": [...], "resident": [...]}')
    p.add_argument("--expert", type=_float_list, default=None)
    p.add_argument("--resident", type=_float_list, default=None)
    p.add_argument("--task", default="")
    p.add_argument("--metric", default="")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("depth2gray", parents=[common], help="8-bit grayscale PGMs from a depth sequence")
    p.add_argument("depth_dir", type=Path)
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--near", type=float, default=None, help="meters mapped to white")
    p.add_argument("--far", type=float, default=None, help="meters mapped to black")
    p.set_defaults(handler=cmd_depth2gray)

    p = sub.add_parser("validate", parents=[common], help="check a manifest and every file it references")
    p.add_argument("manifest", type=Path)
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic expert/resident cohort")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--experts", type=_positive_int, default=4)
    p.add_argument("--residents", type=_positive_int, default=8)
    p.add_argument("--frames", type=_positive_int, default=60)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--task", default="simple")
    p.add_argument("--differ-only", default=None, help="gesture in which residents alone move faster")
    p.set_defaults(handler=cmd_synth)
    return parser


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _analysis_config(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig(
        gap_policy=GapPolicy.parse(args.gap_policy),
        window=args.window,
        smoothing_window=args.smoothing,
        jobs=args.jobs,
    )


def _default_intrinsics(args: argparse.Namespace) -> CameraIntrinsics | None:
    return load_intrinsics(args.intrinsics) if args.intrinsics is not None else None


def _config_echo(
    args: argparse.Namespace, config: AnalysisConfig, results: Sequence[ParticipantResult]
) -> dict[str, Any]:
    intrinsics = {r.intrinsics for r in results}
    echo: dict[str, Any] = {
        **config.to_dict(),
        "alpha": args.alpha,
        "fps_assumed": any(r.fps_assumed for r in results),
    }
    echo["intrinsics"] = intrinsics.pop().to_dict() if len(intrinsics) == 1 else "per-participant"
    return echo


def _out_path(args: argparse.Namespace, default_name: str) -> Path:
    return args.out if args.out is not None else Path(default_name)


def _finish(args: argparse.Namespace, report: MetricReport, default_name: str, csv_text: str | None) -> Path:
    out = _out_path(args, default_name)
    path = report.write(out)
    if args.csv and csv_text is not None:
        write_text_atomic(out.with_suffix(".csv"), csv_text)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_path3d(args: argparse.Namespace) -> Path:
    config = _analysis_config(args)
    results = analyze_manifest(load_manifest(args.manifest), config, _default_intrinsics(args))

    participants = []
    reports = {}
    for r in results:
        reports[r.entry.key] = path_report(r.left, r.right, config.gap_policy)
        participants.append({**r.header(), "path": reports[r.entry.key].to_dict()})

    statistics = []
    for part in ("left", "right", "combined"):
        statistics += compare_by_task(
            results,
            f"{part}.length_3d",
            lambda r, part=part: getattr(reports[r.entry.key], part).observed(),
            args.alpha,
        )
    report = MetricReport(
        "path3d",
        __version__,
        config=_config_echo(args, config, results),
        participants=participants,
        statistics=[c.to_dict() for c in statistics],
    )
    return _finish(args, report, "path3d_report.json", comparisons_csv(statistics))


def cmd_gesture_dist(args: argparse.Namespace) -> Path:
    config = _analysis_config(args)
    results = analyze_manifest(
        load_manifest(args.manifest), config, _default_intrinsics(args), need_labels=True
    )

    participants = []
    labels_seen: set[GestureLabel] = set()
    combined: dict[tuple[str, str, str], dict[GestureLabel, float]] = {}
    for r in results:
        assert r.labels is not None
        gr = gesture_report([r.left, r.right], r.labels, config.gap_policy)
        labels_seen.update(gr.combined)
        participants.append({**r.header(), "gestures": gr.to_dict()})
        if any(len(t.frames) == 0 for t in (r.left, r.right)):
            logger.warning(f"{r.entry.participant_id}: a hand has no samples, left out of the gesture tests")
            continue
        combined[r.entry.key] = {label: gd.distance for label, gd in gr.combined.items()}

    labels = sorted(labels_seen, key=lambda g: g.value)
    statistics = []
    for label in labels:
        statistics += compare_by_task(
            results,
            label.value,
            lambda r, label=label: combined.get(r.entry.key, {}).get(label),
            args.alpha,
        )
    report = MetricReport(
        "gesture-dist",
        __version__,
        config=_config_echo(args, config, results),
        participants=participants,
        statistics=[c.to_dict() for c in statistics],
        sections={"gestures": {label.value: label.display_name for label in labels}},
    )
    return _finish(args, report, "gesture_dist_report.json", comparisons_csv(statistics))


def cmd_project2d(args: argparse.Namespace) -> Path:
    config = _analysis_config(args)
    results = analyze_manifest(load_manifest(args.manifest), config, _default_intrinsics(args))

    participants = []
    reports = {}
    for r in results:
        pr = path_report(r.left, r.right, config.gap_policy)
        reports[r.entry.key] = pr
        record: dict[str, Any] = {
            **r.header(),
            "planes": {
                part: {
                    "length_3d": getattr(pr, part).length_3d,
                    **{plane.value: getattr(pr, part).plane(plane) for plane in Plane},
                    "loss": projection_loss(getattr(pr, part)),
                }
                for part in ("left", "right", "combined")
            },
        }
        if args.tilts:
            per_hand = [view_angle_lengths(r.trajectories[h], args.tilts, config.gap_policy) for h in HANDS
                        if len(r.trajectories[h].frames)]
            record["view_angles"] = [
                {
                    "tilt": tilt,
                    "length_3d": sum(hand[i].length_3d for hand in per_hand),
                    "length_image_plane": sum(hand[i].length_image_plane for hand in per_hand),
                }
                for i, tilt in enumerate(args.tilts)
            ]
        participants.append(record)

    statistics = []
    for plane in Plane:
        statistics += compare_by_task(
            results,
            plane.value,
            lambda r, plane=plane: reports[r.entry.key].combined.observed(f"length_{plane.value}"),
            args.alpha,
        )
    report = MetricReport(
        "project2d",
        __version__,
        config={**_config_echo(args, config, results), "tilts": args.tilts},
        participants=participants,
        statistics=[c.to_dict() for c in statistics],
    )
    return _finish(args, report, "project2d_report.json", comparisons_csv(statistics))


def cmd_eval_detect(args: argparse.Namespace) -> Path:
    config = DetectionEvalConfig(
        classes=parse_class_filter(args.classes),
        interpolation=Interpolation(args.interpolation),
    )
    predictions, ground_truth = load_detections(args.predictions), load_detections(args.ground_truth)
    table = map_50_95(predictions, ground_truth, config)
    sections: dict[str, Any] = {"ap_table": table.to_dict()}
    echo = config.to_dict()
    if args.sweep is not None:
        if not (0.0 < args.sweep <= 1.0):
            raise ValidationError(f"sweep IoU {args.sweep} outside (0, 1]")
        echo["sweep_iou"] = args.sweep
        sections["confidence_sweep"] = {
            row.class_id.value: [
                point._asdict() for point in confidence_sweep(predictions, ground_truth, row.class_id, args.sweep)
            ]
            for row in table.rows
        }
    report = MetricReport("eval-detect", __version__, config=echo, sections=sections)
    return _finish(args, report, "eval_detect_report.json", table.to_csv())


def _label_files(directory: Path) -> dict[str, Path]:
    return {p.stem: p for p in sorted(directory.glob("*.txt"))}


def cmd_eval_segment(args: argparse.Namespace) -> Path:
    config = SegmentationEvalConfig(exclude_background=args.exclude_background)
    profile = TaskProfile(args.profile)

    if args.predictions.is_dir() and args.ground_truth.is_dir():
        preds, gts = _label_files(args.predictions), _label_files(args.ground_truth)
        if set(preds) != set(gts):
            raise ValidationError(
                f"prediction and ground-truth directories differ: {sorted(set(preds) ^ set(gts))}"
            )
        split = score_split(
            [(name, load_labels(gts[name], profile), load_labels(preds[name], profile)) for name in sorted(gts)],
            config,
        )
        section, csv_text = split.to_dict(), split.to_csv()
    elif args.predictions.is_dir() or args.ground_truth.is_dir():
        raise ValidationError("predictions and ground truth must both be files or both be directories")
    else:
        gt = load_labels(args.ground_truth, profile)
        pred = load_labels(args.predictions, profile)
        split = score_split([(args.ground_truth.stem, gt, pred)], config)
        section = score_video(gt, pred, config).to_dict()
        csv_text = split.to_csv()

    report = MetricReport(
        "eval-segment",
        __version__,
        config={**config.to_dict(), "profile": profile.value},
        sections={"segmentation": section},
    )
    return _finish(args, report, "eval_segment_report.json", csv_text)


def _compare_inputs(args: argparse.Namespace) -> tuple[list[float], list[float]]:
    if args.input is not None:
        return load_group_values(args.input)
    if args.expert is None or args.resident is None:
        raise ValidationError("pass --input or both --expert and --resident")
    return args.expert, args.resident


def cmd_compare(args: argparse.Namespace) -> Path:
    experts, residents = _compare_inputs(args)
    comparison = compare_groups(experts, residents, args.alpha, args.task, args.metric)
    report = MetricReport(
        "compare",
        __version__,
        config={"alpha": args.alpha},
        statistics=[comparison.to_dict()],
    )
    return _finish(args, report, "compare_report.json", comparisons_csv([comparison]))


def cmd_depth2gray(args: argparse.Namespace) -> Path:
    mapping = None
    if args.near is not None or args.far is not None:
        if args.near is None or args.far is None:
            raise ValidationError("--near and --far must be given together")
        mapping = GrayscaleMapping(args.near, args.far)
    out_dir = args.out_dir if args.out_dir is not None else args.depth_dir.parent / f"{args.depth_dir.name}_gray"
    convert_sequence(args.depth_dir, out_dir, mapping, jobs=args.jobs)
    return out_dir


def cmd_validate(args: argparse.Namespace) -> Path:
    manifest = load_manifest(args.manifest, check_paths=False)
    if not len(manifest):
        raise ValidationError("manifest has no participants")
    config = _analysis_config(args)
    intrinsics = _default_intrinsics(args)
    failed = 0
    for entry in sorted(manifest, key=lambda e: e.key):
        try:
            analyze_manifest([entry], config, intrinsics, need_labels=entry.labels is not None)
        except SkillGaugeError as exc:
            failed += 1
            print(f"FAIL {entry.participant_id} ({entry.task}): {exc.detail}", file=sys.stderr)
        else:
            print(f"OK   {entry.participant_id} ({entry.task})", file=sys.stderr)
    if failed:
        raise ValidationError(f"{failed} of {len(manifest)} participants failed validation")
    return args.manifest


def cmd_synth(args: argparse.Namespace) -> Path:
    options = CohortOptions(
        n_experts=args.experts,
        n_residents=args.residents,
        frames=args.frames,
        task=args.task,
        seed=args.seed,
        differ_only=GestureLabel.parse(args.differ_only) if args.differ_only else None,
    )
    return generate_cohort(args.out_dir, options)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging()
    handler: Handler = args.handler
    try:
        path = handler(args)
    except SkillGaugeError as exc:
        logger.error(str(exc))
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        logger.opt(exception=exc).debug("Unhandled error")
        logger.error(f"Unexpected error: {exc}")
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
