"""
MetricReport assembly and deterministic serialization.

Identical inputs produce byte-identical files: keys are sorted, floats are
rounded to 6 significant digits and nothing time- or host-dependent is
recorded.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

SCHEMA_VERSION = 1


def sig6(value: float) -> float | None:
    """Round to 6 significant digits; non-finite values become None."""
    value = float(value)
    if not math.isfinite(value):
        return None
    return float(f"{value:.6g}")


def normalize(obj: Any) -> Any:
    """Convert a report tree into JSON-ready values with rounded floats."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return sig6(obj)
    if isinstance(obj, Path):
        return obj.as_posix()
    if isinstance(obj, Mapping):
        return {str(normalize(k)): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [normalize(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return normalize(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__} into a report")


def dumps(obj: Any) -> str:
    return json.dumps(normalize(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        rounded = sig6(value)
        return "" if rounded is None else f"{rounded:.6g}"
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def write_text_atomic(path: str | Path, text: str) -> Path:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


@dataclass
class MetricReport:
    """Everything one command computed, ready for JSON output."""

    command: str
    tool_version: str
    config: dict[str, Any] = field(default_factory=dict)
    participants: list[dict[str, Any]] = field(default_factory=list)
    statistics: list[dict[str, Any]] = field(default_factory=list)
    sections: dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
        }
        if self.participants:
            out["participants"] = sorted(
                self.participants, key=lambda p: (str(p.get("task", "")), str(p.get("participant", "")))
            )
        if self.statistics:
            out["statistics"] = self.statistics
        out.update(self.sections)
        return out

    def dumps(self) -> str:
        return dumps(self.to_dict())

    def write(self, path: str | Path) -> Path:
        written = write_text_atomic(path, self.dumps())
        logger.info(f"Wrote {self.command} report to {written}")
        return written


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return write_text_atomic(path, to_csv(header, rows))
