"""Named inequality checks collected into pass/fail reports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class Check:
    """One named inequality ``value <relation> bound``.

    ``waived`` checks are evaluated and reported but do not affect the verdict.
    """

    name: str
    value: float
    bound: float
    relation: str = "<"
    note: str = ""
    waived: bool = False

    @property
    def holds(self) -> bool:
        v, b = float(self.value), float(self.bound)
        if math.isnan(v) or math.isnan(b):
            return False
        return {"<": v < b, "<=": v <= b, ">": v > b, ">=": v >= b, "==": v == b}[self.relation]

    @property
    def status(self) -> str:
        if self.waived:
            return "waived"
        return "pass" if self.holds else "fail"

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "value": _num(self.value),
            "relation": self.relation,
            "bound": _num(self.bound),
            "status": self.status,
            "holds": self.holds,
        }
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Report:
    """Ordered collection of checks."""

    checks: list[Check] = field(default_factory=list)

    def add(self, name, value, bound, relation="<", note="", waived=False) -> Check:
        c = Check(name, float(value), float(bound), relation, note, waived)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.value, c.bound, c.relation, c.note, c.waived))

    @property
    def passed(self) -> bool:
        return all(c.holds for c in self.checks if not c.waived)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.waived and not c.holds]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.checks)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "n_checks": len(self.checks),
            "n_failed": len(self.failures),
            "checks": [c.to_json() for c in self.checks],
        }
