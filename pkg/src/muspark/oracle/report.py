"""The verification report shared by lockstep checking and fuzzing."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from muspark.oracle.alias import Violation

SCHEMA_VERSION = 1


@dataclass
class VerifyReport:
    """Counts of what was explored plus every (deduplicated) violation.

    ``status`` is "Checked", or "NotApplicable" when the single verified
    program is rejected by the checker.  ``elapsed`` is wall time in seconds
    and is left out of the machine rendering unless asked for, so that
    reports are reproducible.
    """

    status: str = "Checked"
    programs: int = 0
    accepted: int = 0
    rejected: int = 0
    executions: int = 0
    truncated: int = 0
    checkpoints: int = 0
    outcomes: Counter = field(default_factory=Counter)
    violations: list[Violation] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)  # one per fuzzed program
    elapsed: float = 0.0

    @property
    def clean(self) -> bool:
        return not self.violations

    def merge(self, other: "VerifyReport") -> None:
        self.programs += other.programs
        self.accepted += other.accepted
        self.rejected += other.rejected
        self.executions += other.executions
        self.truncated += other.truncated
        self.checkpoints += other.checkpoints
        self.outcomes.update(other.outcomes)
        self.violations.extend(other.violations)
        self.notes.extend(other.notes)
        self.rows.extend(other.rows)
        self.elapsed += other.elapsed

    def to_dict(self, include_wall: bool = False) -> dict:
        data = {
            "version": SCHEMA_VERSION,
            "status": self.status,
            "programs": self.programs,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "executions": self.executions,
            "truncated": self.truncated,
            "checkpoints": self.checkpoints,
            "outcomes": dict(sorted(self.outcomes.items())),
            "violations": [v.to_dict() for v in self.violations],
            "notes": list(self.notes),
            "rows": [dict(r) for r in self.rows],
        }
        if include_wall:
            data["elapsed"] = self.elapsed
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "VerifyReport":
        return cls(
            status=data["status"],
            programs=data["programs"],
            accepted=data["accepted"],
            rejected=data["rejected"],
            executions=data["executions"],
            truncated=data["truncated"],
            checkpoints=data["checkpoints"],
            outcomes=Counter(data["outcomes"]),
            violations=[Violation.from_dict(v) for v in data["violations"]],
            notes=list(data["notes"]),
            rows=[dict(r) for r in data.get("rows", [])],
            elapsed=data.get("elapsed", 0.0),
        )

    def render(self, timing: bool = False) -> str:
        lines = [f"status: {self.status}"]
        if self.programs > 1 or self.rejected:
            lines.append(f"programs: {self.programs} (accepted {self.accepted}, rejected {self.rejected})")
        lines.append(f"executions: {self.executions} (truncated {self.truncated})")
        lines.append(f"checkpoints: {self.checkpoints}")
        if self.outcomes:
            lines.append("outcomes: " + ", ".join(f"{k} {v}" for k, v in sorted(self.outcomes.items())))
        for note in self.notes:
            lines.append(f"note: {note}")
        lines.append(f"violations: {len(self.violations)}")
        for v in self.violations:
            lines.append(f"  {v.kind} at {v.point}: {v.detail}")
            if v.choices or v.source:
                lines.append(f"    replay with choices {v.choices or '(none)'}")
        if timing:
            lines.append(f"elapsed: {self.elapsed:.2f}s")
        return "\n".join(lines)

