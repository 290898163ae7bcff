"""Three-valued results for bounded behavioural checks.

A checker never claims unbounded equivalence: INEQUIVALENT comes with
replayable evidence and is definitive, EQUIVALENT_UP_TO means no difference
was found within the stated bounds, UNKNOWN means a resource bound (fuel or
depth) cut the search before it could decide.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Optional


class Status(enum.Enum):
    INEQUIVALENT = "inequivalent"
    EQUIVALENT_UP_TO = "equivalent_up_to"
    UNKNOWN = "unknown"


@dataclass
class Verdict:
    status: Status
    depth: int = 0
    evidence: list = field(default_factory=list)
    reason: Optional[str] = None  # for UNKNOWN: "fuel" or "depth"
    truncated: bool = False
    states_visited: int = 0
    tau_fuel: int = 0
    note: Optional[str] = None

    @property
    def inequivalent(self) -> bool:
        return self.status is Status.INEQUIVALENT

    @property
    def equivalent(self) -> bool:
        return self.status is Status.EQUIVALENT_UP_TO

    @property
    def unknown(self) -> bool:
        return self.status is Status.UNKNOWN

    def to_json(self) -> dict[str, Any]:
        out = {
            "verdict": self.status.value,
            "depth": self.depth,
            "tau_fuel": self.tau_fuel,
            "evidence": [str(e) for e in self.evidence],
            "truncated": self.truncated,
            "states_visited": self.states_visited,
        }
        if self.reason:
            out["reason"] = self.reason
        if self.note:
            out["note"] = self.note
        return out

    def __str__(self):
        body = self.status.value
        if self.inequivalent and self.evidence:
            body += f" [{'; '.join(str(e) for e in self.evidence)}]"
        if self.unknown and self.reason:
            body += f" ({self.reason})"
        if self.truncated:
            body += " (truncated)"
        return body


def dumps(v: Verdict) -> str:
    return json.dumps(v.to_json(), indent=2)
