from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class Check:
    """One named validation result."""

    name: str
    value: float
    tolerance: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.value:.6g} ({self.tolerance}) {self.detail}".rstrip()

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = bool(self.passed)
        d["value"] = float(self.value)
        return d


def at_most(name: str, value: float, bound: float, detail: str = "") -> Check:
    return Check(name, float(value), f"<= {bound:g}", bool(value <= bound), detail)


def at_least(name: str, value: float, bound: float, detail: str = "") -> Check:
    return Check(name, float(value), f">= {bound:g}", bool(value >= bound), detail)


def within(name: str, value: float, lo: float, hi: float, detail: str = "") -> Check:
    return Check(name, float(value), f"in [{lo:g}, {hi:g}]", bool(lo <= value <= hi), detail)


def holds(name: str, condition: bool, detail: str = "") -> Check:
    return Check(name, 1.0 if condition else 0.0, "== 1", bool(condition), detail)
