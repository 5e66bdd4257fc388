"""Pass/fail bookkeeping shared by the certification routines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


class CertificationError(AssertionError):
    pass


@dataclass
class CertificationReport:
    suite: str
    params: dict[str, Any] = field(default_factory=dict)
    checks: list[dict[str, Any]] = field(default_factory=list)

    def record(self, name: str, passed: bool, **details) -> bool:
        self.checks.append({"name": name, "passed": bool(passed), **details})
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    @property
    def failures(self) -> list[dict[str, Any]]:
        return [c for c in self.checks if not c["passed"]]

    def merge(self, other: "CertificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append({**c, "name": prefix + c["name"]})

    def check(self) -> "CertificationReport":
        if not self.passed:
            names = ", ".join(c["name"] for c in self.failures[:5])
            raise CertificationError(f"{self.suite}: {len(self.failures)} check(s) failed: {names}")
        return self

    def to_dict(self) -> dict[str, Any]:
        return {"suite": self.suite, "params": self.params, "passed": self.passed,
                "n_checks": len(self.checks), "failures": self.failures}
