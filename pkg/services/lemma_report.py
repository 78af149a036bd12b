"""
Lemma Report - Result container shared by the verification operations
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List


@dataclass
class LemmaReport:
    """Outcome of one verification sweep"""
    name: str
    cases: int = 0
    violations: List[Dict[str, Any]] = field(default_factory=list)
    exceptions: List[Dict[str, Any]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def violation(self, **info):
        self.violations.append(info)

    def exception(self, **info):
        self.exceptions.append(info)

    def merge(self, other: "LemmaReport") -> "LemmaReport":
        self.cases += other.cases
        self.violations.extend({"check": other.name, **v} for v in other.violations)
        self.exceptions.extend({"check": other.name, **e} for e in other.exceptions)
        for key, value in other.details.items():
            self.details[f"{other.name}.{key}"] = value
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "cases": self.cases,
            "violations": self.violations,
            "exceptions": self.exceptions,
            "details": self.details,
        }
