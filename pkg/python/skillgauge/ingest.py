"""
Parsers and writers for every on-disk format skillgauge consumes.

Formats:
    - depth sequences: ``frame_%06d.pgm`` (binary P5, maxval 65535,
      big-endian samples) plus a ``meta.json`` sidecar
    - ``intrinsics.json``: ``{"fx", "fy", "cx", "cy", "depth_scale"}``
    - detections / ground truth: JSON Lines, one frame per line
    - gesture labels: one token per line
    - group manifest: JSON array of participant entries

Example:
    >>> from skillgauge import ingest
    >>> seq = ingest.load_depth_sequence("P01/depth")
    >>> dets = ingest.load_detections("P01/detections.jsonl")
"""

from __future__ import annotations

import json
import re
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from .errors import FormatError, GapError, ParseError, SkillGaugeError, ValidationError
from .models import (
    BoundingBox,
    CameraIntrinsics,
    DepthFrame,
    DepthMeta,
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

FRAME_PATTERN = re.compile(r"^frame_(\d{6})\.pgm$")
FRAME_NAME = "frame_{:06d}.pgm"
META_NAME = "meta.json"
DEFAULT_FPS = 30.0

_WHITESPACE = b" \t\r\n\v\f"


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------


def _pgm_header(data: bytes, path: Path) -> tuple[list[int], int]:
    """Read magic + 3 integer fields; return (fields, offset of pixel data)."""
    if data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {data[:2]!r})")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise FormatError(f"{path}: truncated PGM header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
        elif ch in _WHITESPACE:
            pos += 1
        else:
            start = pos
            while pos < len(data) and data[pos : pos + 1] not in _WHITESPACE:
                pos += 1
            token = data[start:pos]
            if not token.isdigit():
                raise FormatError(f"{path}: bad PGM header token {token!r}")
            fields.append(int(token))
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise FormatError(f"{path}: missing separator after PGM header")
    return fields, pos + 1


def read_pgm(path: str | Path) -> tuple[NDArray[np.uint16], int]:
    """Read a binary PGM; returns (rows x cols array, maxval)."""
    path = Path(path)
    data = path.read_bytes()
    (width, height, maxval), offset = _pgm_header(data, path)
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: empty PGM ({width}x{height})")
    if not 0 < maxval <= 65535:
        raise FormatError(f"{path}: maxval {maxval} out of range")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = data[offset : offset + expected]
    if len(raster) != expected:
        raise FormatError(f"{path}: expected {expected} raster bytes, found {len(raster)}")
    values = np.frombuffer(raster, dtype=dtype).reshape(height, width).astype(np.uint16)
    return values, maxval


def write_pgm(path: str | Path, values: NDArray[Any], maxval: int = 65535) -> Path:
    """Write a 2-D array as binary PGM (8-bit when maxval <= 255)."""
    path = Path(path)
    if values.ndim != 2:
        raise ValidationError("PGM raster must be 2-D")
    height, width = values.shape
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(values, dtype=dtype).tobytes())
    return path


# ---------------------------------------------------------------------------
# JSON sidecars
# ---------------------------------------------------------------------------


def _read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path, exc.lineno)


def _number(obj: dict[str, Any], key: str, path: Path, kind: type = float) -> Any:
    if key not in obj:
        raise FormatError(f"{path}: missing field {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{path}: field {key!r} must be a number")
    if kind is int and float(value) != int(value):
        raise FormatError(f"{path}: field {key!r} must be an integer")
    return kind(value)


def load_meta(path: str | Path) -> DepthMeta:
    """Parse ``meta.json``; a missing fps falls back to 30 and is flagged."""
    path = Path(path)
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: meta must be a JSON object")
    fps_assumed = "fps" not in raw
    if fps_assumed:
        logger.warning(f"{path}: no fps in meta, assuming {DEFAULT_FPS}")
    try:
        return DepthMeta(
            width=_number(raw, "width", path, int),
            height=_number(raw, "height", path, int),
            fps=DEFAULT_FPS if fps_assumed else _number(raw, "fps", path),
            depth_scale=_number(raw, "depth_scale", path),
            fps_assumed=fps_assumed,
        )
    except ValidationError as exc:
        raise FormatError(f"{path}: {exc.detail}")


def write_meta(path: str | Path, meta: DepthMeta) -> Path:
    path = Path(path)
    payload: dict[str, Any] = {
        "width": meta.width,
        "height": meta.height,
        "depth_scale": meta.depth_scale,
    }
    if not meta.fps_assumed:
        payload["fps"] = meta.fps
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def load_intrinsics(path: str | Path) -> CameraIntrinsics:
    path = Path(path)
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: intrinsics must be a JSON object")
    return CameraIntrinsics(
        fx=_number(raw, "fx", path),
        fy=_number(raw, "fy", path),
        cx=_number(raw, "cx", path),
        cy=_number(raw, "cy", path),
        depth_scale=_number(raw, "depth_scale", path),
    )


def write_intrinsics(path: str | Path, intr: CameraIntrinsics) -> Path:
    path = Path(path)
    path.write_text(json.dumps(intr.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Depth sequences
# ---------------------------------------------------------------------------


def _frame_files(directory: Path) -> dict[int, Path]:
    found: dict[int, Path] = {}
    for entry in directory.iterdir():
        match = FRAME_PATTERN.match(entry.name)
        if match and entry.is_file():
            found[int(match.group(1))] = entry
    return found


def load_depth_sequence(
    dir_path: str | Path, meta_path: str | Path | None = None
) -> DepthSequence:
    """Load ``frame_%06d.pgm`` files in ascending index order.

    Indices must run contiguously from 0. Every frame must be 16-bit
    (maxval 65535) and match the meta dimensions.
    """
    directory = Path(dir_path)
    if not directory.is_dir():
        raise FormatError(f"depth directory not found: {directory}")
    meta = load_meta(Path(meta_path) if meta_path is not None else directory / META_NAME)

    files = _frame_files(directory)
    if not files:
        raise FormatError(f"no frame_%06d.pgm files in {directory}")
    missing = sorted(set(range(max(files) + 1)) - set(files))
    if missing:
        raise GapError(missing, directory)

    frames = []
    for index in sorted(files):
        values, maxval = read_pgm(files[index])
        if maxval != 65535:
            raise FormatError(f"{files[index]}: maxval {maxval}, expected 65535")
        if values.shape != (meta.height, meta.width):
            raise FormatError(
                f"{files[index]}: {values.shape[1]}x{values.shape[0]} does not match "
                f"meta {meta.width}x{meta.height}"
            )
        frames.append(DepthFrame(index=index, values=values, timestamp=index / meta.fps))

    logger.debug(f"Loaded {len(frames)} depth frames from {directory}")
    return DepthSequence(meta=meta, frames=tuple(frames))


def write_depth_sequence(
    dir_path: str | Path,
    frames: Iterable[DepthFrame | NDArray[Any]],
    depth_scale: float = 0.001,
    fps: float | None = DEFAULT_FPS,
) -> Path:
    """Write frames as 16-bit PGMs plus ``meta.json``; frames are renumbered from 0."""
    directory = Path(dir_path)
    directory.mkdir(parents=True, exist_ok=True)
    shape: tuple[int, ...] | None = None
    for i, frame in enumerate(frames):
        values = frame.values if isinstance(frame, DepthFrame) else np.asarray(frame)
        if shape is None:
            shape = values.shape
        elif values.shape != shape:
            raise ValidationError(f"frame {i} shape {values.shape} differs from {shape}")
        write_pgm(directory / FRAME_NAME.format(i), values, maxval=65535)
    if shape is None:
        raise ValidationError("no frames to write")
    meta = DepthMeta(
        width=int(shape[1]),
        height=int(shape[0]),
        fps=DEFAULT_FPS if fps is None else fps,
        depth_scale=depth_scale,
        fps_assumed=fps is None,
    )
    write_meta(directory / META_NAME, meta)
    return directory


# ---------------------------------------------------------------------------
# Detections
# ---------------------------------------------------------------------------


def _parse_detection(raw: Any, frame: int, path: Path, lineno: int) -> Detection:
    if not isinstance(raw, dict):
        raise ParseError("detection must be an object", path, lineno)
    for key in ("class", "bbox"):
        if key not in raw:
            raise ParseError(f"detection missing {key!r}", path, lineno)
    try:
        class_id = ObjectClass.parse(str(raw["class"]))
    except ParseError as exc:
        raise ParseError(exc.detail, path, lineno)
    bbox = raw["bbox"]
    if (
        not isinstance(bbox, list)
        or len(bbox) != 4
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in bbox)
    ):
        raise ParseError("bbox must be a list of 4 numbers", path, lineno)
    confidence = raw.get("confidence")
    if confidence is not None and (
        isinstance(confidence, bool) or not isinstance(confidence, (int, float))
    ):
        raise ParseError("confidence must be a number", path, lineno)
    try:
        return Detection(
            frame=frame,
            class_id=class_id,
            box=BoundingBox.from_list(bbox),
            confidence=None if confidence is None else float(confidence),
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}:{lineno}: {exc.detail}")


def load_detections(path: str | Path) -> DetectionSet:
    """Parse a detection (or ground-truth) JSON Lines file.

    Each line is ``{"frame": n, "detections": [{"class", "confidence", "bbox"}]}``;
    ground truth omits ``confidence``. Lines for the same frame are merged in
    file order. Blank lines are ignored.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path)

    grouped: dict[int, list[Detection]] = {}
    has_conf = has_gt = False
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON ({exc.msg})", path, lineno)
        if not isinstance(record, dict) or "frame" not in record:
            raise ParseError("line must be an object with a 'frame' field", path, lineno)
        frame = record["frame"]
        if isinstance(frame, bool) or not isinstance(frame, int) or frame < 0:
            raise ParseError(f"frame must be a non-negative integer, got {frame!r}", path, lineno)
        items = record.get("detections", [])
        if not isinstance(items, list):
            raise ParseError("'detections' must be a list", path, lineno)
        bucket = grouped.setdefault(frame, [])
        for raw in items:
            det = _parse_detection(raw, frame, path, lineno)
            has_conf |= det.confidence is not None
            has_gt |= det.confidence is None
            bucket.append(det)

    if has_conf and has_gt:
        logger.warning(f"{path}: mixes boxes with and without confidence")
    logger.debug(f"Loaded {sum(map(len, grouped.values()))} boxes over {len(grouped)} frames from {path}")
    return DetectionSet(
        {k: tuple(v) for k, v in sorted(grouped.items())},
        ground_truth=has_gt and not has_conf,
    )


def dump_detections(path: str | Path, detections: DetectionSet, ground_truth: bool = False) -> Path:
    """Inverse of :func:`load_detections`; floats are written with ``repr`` precision.

    With ``ground_truth`` confidences are dropped, turning predictions into
    a ground-truth file.
    """
    path = Path(path)
    lines = []
    for frame in detections.frames:
        items = []
        for det in detections.for_frame(frame):
            item: dict[str, Any] = {"class": det.class_id.value, "bbox": det.box.to_list()}
            if det.confidence is not None and not ground_truth:
                item["confidence"] = det.confidence
            items.append(item)
        lines.append(json.dumps({"frame": frame, "detections": items}))
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Labels
# ---------------------------------------------------------------------------


def load_labels(path: str | Path, task_profile: TaskProfile = TaskProfile.SUTURE_PAD) -> LabelSequence:
    """Parse a frame-wise label file (one ``G<n>`` token per line)."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", path)
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ValidationError(f"{path}: label file is empty")

    labels = []
    for lineno, line in enumerate(lines, start=1):
        try:
            labels.append(GestureLabel.parse(line))
        except ParseError as exc:
            raise ParseError(exc.detail, path, lineno)
    try:
        return LabelSequence(tuple(labels), task_profile)
    except SkillGaugeError as exc:
        raise type(exc)(f"{path}: {exc.detail}")


def write_labels(path: str | Path, labels: LabelSequence | Sequence[GestureLabel]) -> Path:
    path = Path(path)
    path.write_text("".join(f"{label.value}\n" for label in labels), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

_ENTRY_PATHS = ("depth", "detections", "labels", "intrinsics")


def load_manifest(path: str | Path, check_paths: bool = True) -> GroupManifest:
    """Parse a group manifest; relative paths resolve against its directory.

    Entry keys: ``participant``, ``group`` (Expert|Resident), ``task`` and the
    optional paths ``depth``, ``detections``, ``labels``, ``intrinsics`` plus
    an optional ``profile``.
    """
    path = Path(path)
    raw = _read_json(path)
    if not isinstance(raw, list):
        raise ParseError("manifest must be a JSON array", path)
    root = path.parent

    entries: list[ManifestEntry] = []
    seen: set[tuple[str, str, str]] = set()
    for i, item in enumerate(raw):
        where = f"{path} entry {i}"
        if not isinstance(item, dict):
            raise ParseError(f"entry {i} must be an object", path)
        for key in ("participant", "group", "task"):
            if not isinstance(item.get(key), str) or not item[key]:
                raise ValidationError(f"{where}: missing or empty {key!r}")
        resolved: dict[str, Path | None] = {}
        for key in _ENTRY_PATHS:
            value = item.get(key)
            if value is None:
                resolved[key] = None
                continue
            p = Path(value)
            p = p if p.is_absolute() else root / p
            if check_paths and not p.exists():
                raise ValidationError(f"{where}: {key} path does not exist: {p}")
            resolved[key] = p
        entry = ManifestEntry(
            participant_id=item["participant"],
            group=Group.parse(item["group"]),
            task=item["task"],
            depth_dir=resolved["depth"],
            detections=resolved["detections"],
            labels=resolved["labels"],
            intrinsics=resolved["intrinsics"],
            profile=TaskProfile.parse(item["profile"]) if item.get("profile") else None,
        )
        if entry.key in seen:
            raise ValidationError(
                f"{where}: duplicate participant {entry.participant_id!r} "
                f"in task {entry.task!r}, group {entry.group.value}"
            )
        seen.add(entry.key)
        entries.append(entry)

    return GroupManifest(entries=tuple(entries), root=root)


def write_manifest(path: str | Path, entries: Iterable[ManifestEntry]) -> Path:
    """Write a manifest with paths relative to its directory where possible."""
    path = Path(path)
    root = path.parent.resolve()

    def rel(p: Path | None) -> str | None:
        if p is None:
            return None
        try:
            return Path(p).resolve().relative_to(root).as_posix()
        except ValueError:
            return str(p)

    payload = []
    for e in entries:
        item: dict[str, Any] = {"participant": e.participant_id, "group": e.group.value, "task": e.task}
        for key, value in (
            ("depth", e.depth_dir),
            ("detections", e.detections),
            ("labels", e.labels),
            ("intrinsics", e.intrinsics),
        ):
            if value is not None:
                item[key] = rel(value)
        if e.profile is not None:
            item["profile"] = e.profile.value
        payload.append(item)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def load_group_values(path: str | Path) -> tuple[list[float], list[float]]:
    """Read ``{"expert": [...], "resident": [...]}`` metric values."""
    path = Path(path)
    raw = _read_json(path)
    if not isinstance(raw, dict) or "expert" not in raw or "resident" not in raw:
        raise ParseError('expected {"expert": [...], "resident": [...]}', path)
    values = []
    for key in ("expert", "resident"):
        items = raw[key]
        if not isinstance(items, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in items
        ):
            raise ParseError(f"{key!r} must be a list of numbers", path)
        values.append([float(v) for v in items])
    return values[0], values[1]
