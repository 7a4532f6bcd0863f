"""Exception hierarchy shared across the pipeline.

Every error raised on a user-facing path carries an actionable message:
configuration errors name the offending parameter, format errors name the
byte or token offset, alignment errors name the word index.
"""

from __future__ import annotations


class ArapipeError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(ArapipeError):
    """Invalid configuration value or flag combination."""


class FormatError(ArapipeError):
    """Malformed input data: bad record bytes, bad markers, bad table files."""

    def __init__(self, message: str, *, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class AlignmentError(ArapipeError):
    """Label/token alignment failure (e.g. a word with no pieces)."""


class DecodeError(ArapipeError):
    """No admissible output exists (e.g. every answer span is masked out)."""
