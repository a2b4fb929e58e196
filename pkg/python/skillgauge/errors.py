"""
Error types raised by skillgauge.

Every error derives from :class:`SkillGaugeError`, itself a ``ValueError``,
so callers can catch either. Messages start with a fixed prefix
(``"Parse error: ..."``) and each class carries the process exit code the
command line maps it to.
"""

from __future__ import annotations

from collections.abc import Iterable
from pathlib import Path


class SkillGaugeError(ValueError):
    """Base class for all skillgauge errors."""

    prefix = "Error"
    exit_code = 2

    def __init__(self, message: str) -> None:
        super().__init__(f"{self.prefix}: {message}")
        self.detail = message


class ParseError(SkillGaugeError):
    """A text or JSON input could not be parsed."""

    prefix = "Parse error"

    def __init__(
        self,
        message: str,
        path: str | Path | None = None,
        line: int | None = None,
    ) -> None:
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")
        self.path = None if path is None else Path(path)
        self.line = line


class FormatError(SkillGaugeError):
    """A binary file or sidecar does not match the expected format."""

    prefix = "Format error"


class GapError(FormatError):
    """A frame sequence is missing indices."""

    def __init__(self, missing: Iterable[int], directory: str | Path | None = None) -> None:
        self.missing = tuple(sorted(missing))
        shown = ", ".join(str(i) for i in self.missing[:20])
        if len(self.missing) > 20:
            shown += f", ... ({len(self.missing)} total)"
        where = f" in {directory}" if directory is not None else ""
        super().__init__(f"missing frame indices{where}: [{shown}]")


class ValidationError(SkillGaugeError):
    """A value violates a documented contract."""

    prefix = "Validation error"


class ProfileError(ValidationError):
    """A gesture label is not allowed by the active task profile."""


class InvalidDepth(ValidationError):
    """Raw depth 0 (no return) cannot be deprojected."""


class EmptyInput(ValidationError):
    """An operation received zero frames or zero samples."""


class DegenerateError(SkillGaugeError):
    """Statistics are undefined for the given samples."""

    prefix = "Degenerate statistics"
    exit_code = 3


class ParticipantError(SkillGaugeError):
    """Processing of one manifest participant failed."""

    prefix = "Participant error"

    def __init__(self, participant_id: str, cause: BaseException) -> None:
        super().__init__(f"{participant_id}: {cause}")
        self.participant_id = participant_id
        self.cause = cause
        self.exit_code = cause.exit_code if isinstance(cause, SkillGaugeError) else 1


__all__ = [
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
]
