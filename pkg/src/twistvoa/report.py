"""Pass/fail records shared by every verifier."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class CheckReport:
    name: str
    passed: bool = True
    checked: int = 0
    failure: dict | None = None
    details: dict = field(default_factory=dict)

    def fail(self, **locus: Any) -> "CheckReport":
        if self.failure is None:
            self.failure = {k: _jsonable(v) for k, v in locus.items()}
        self.passed = False
        return self

    def tick(self, n: int = 1) -> None:
        self.checked += n

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failure": self.failure,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }

    def __bool__(self) -> bool:
        return self.passed


def _jsonable(v: Any):
    from fractions import Fraction

    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if hasattr(v, "to_json"):
        return v.to_json()
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    return repr(v)


def combine(name: str, reports: list[CheckReport]) -> CheckReport:
    out = CheckReport(name)
    for r in reports:
        out.checked += r.checked
        if not r.passed and out.passed:
            out.fail(check=r.name, **(r.failure or {}))
    out.details["parts"] = [r.name for r in reports]
    return out
