"""Report types shared by the property suites"""

from dataclasses import dataclass, field
from typing import Any, Dict, List


@dataclass
class CheckOutcome:
    """One named check of a suite; ``detail`` carries the counterexample on failure."""

    name: str
    passed: bool
    detail: str = ""
    data: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"name": self.name, "passed": self.passed}
        if self.detail:
            out["detail"] = self.detail
        if self.data:
            out["data"] = self.data
        return out


@dataclass
class SuiteReport:
    name: str
    outcomes: List[CheckOutcome] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "", **data: Any) -> CheckOutcome:
        outcome = CheckOutcome(name, bool(passed), detail, dict(data))
        self.outcomes.append(outcome)
        return outcome

    def extend(self, other: "SuiteReport") -> None:
        self.outcomes.extend(other.outcomes)

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)

    @property
    def failures(self) -> List[CheckOutcome]:
        return [o for o in self.outcomes if not o.passed]

    def outcome(self, name: str) -> CheckOutcome:
        for o in self.outcomes:
            if o.name == name:
                return o
        raise KeyError(name)

    def to_json(self) -> Dict[str, Any]:
        return {
            "suite": self.name,
            "passed": self.passed,
            "total": len(self.outcomes),
            "failed": len(self.failures),
            "checks": [o.to_json() for o in self.outcomes],
        }
