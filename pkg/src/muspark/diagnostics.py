"""Source locations and structured diagnostics shared by every phase."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional


@dataclass(frozen=True, order=True)
class SourceLocation:
    line: int
    column: int
    offset: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"

    def to_dict(self) -> dict[str, int]:
        return {"line": self.line, "column": self.column, "offset": self.offset}

    @classmethod
    def from_dict(cls, data: dict[str, int]) -> "SourceLocation":
        return cls(data["line"], data["column"], data["offset"])


NOWHERE = SourceLocation(0, 0, 0)


@dataclass(frozen=True)
class Diagnostic:
    """A single rule violation.

    ``rule`` is the formal rule identifier when one applies (``T-readField``,
    ``P-B-entryPointInOut``...), otherwise a legality-condition name.  ``kind``
    is a short stable classifier used by tests and tooling.
    """

    rule: str
    kind: str
    message: str
    location: SourceLocation = NOWHERE
    path: Optional[str] = None
    required: tuple[str, ...] = ()
    actual: Optional[str] = None
    node: Optional[int] = field(default=None, compare=False)

    def render(self, filename: str = "<input>") -> str:
        text = f"{filename}:{self.location}: {self.rule} [{self.kind}] {self.message}"
        if self.required:
            text += f" (required {'/'.join(self.required)}, actual {self.actual})"
        return text

    def machine(self) -> str:
        """Stable one-line rendering used by golden files."""
        parts = [self.rule, self.kind, str(self.location)]
        if self.path is not None:
            parts.append(self.path)
        if self.required:
            parts.append("/".join(self.required))
            parts.append(str(self.actual))
        return " ".join(parts)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule": self.rule,
            "kind": self.kind,
            "message": self.message,
            "location": self.location.to_dict(),
            "path": self.path,
            "required": list(self.required),
            "actual": self.actual,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Diagnostic":
        return cls(
            rule=data["rule"],
            kind=data["kind"],
            message=data["message"],
            location=SourceLocation.from_dict(data["location"]),
            path=data.get("path"),
            required=tuple(data.get("required", ())),
            actual=data.get("actual"),
        )


class MuSparkError(Exception):
    """Base class for errors raised (not reported) by the toolchain."""


class LexError(MuSparkError):
    def __init__(self, message: str, location: SourceLocation):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.message = message


class ParseError(MuSparkError):
    def __init__(self, message: str, location: SourceLocation, expected: tuple[str, ...] = ()):
        text = f"{location}: {message}"
        if expected:
            text += f" (expected one of: {', '.join(expected)})"
        super().__init__(text)
        self.location = location
        self.message = message
        self.expected = expected


class ContractViolation(MuSparkError):
    """An internal invariant was broken; indicates a bug upstream (e.g. an
    ill-typed program reached a phase that requires a well-typed one)."""
