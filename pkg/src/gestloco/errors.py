"""Exception types shared across the package."""

from __future__ import annotations


class GestlocoError(Exception):
    """Base class for all package errors."""


class LogFormatError(GestlocoError):
    """A hand/gamepad log stream could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ModelFormatError(GestlocoError):
    """A classifier model file is unreadable, truncated or wrong-version."""


class ConfigError(GestlocoError):
    """One or more configuration/manifest problems.

    Collects every problem found so callers can report them all at once.
    """

    def __init__(self, problems: list[str] | str):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
