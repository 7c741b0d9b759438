"""Structured pass/fail records for checked inequalities."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable

STATUSES = ("pass", "fail", "condition not met", "exploratory")


@dataclass
class VerificationReport:
    name: str
    lhs: float
    rhs: float
    tol: float = 1e-9
    params: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    asserted: bool = True
    status: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.holds else "fail"
        if not self.asserted and self.status in ("pass", "fail"):
            self.details.setdefault("observed", self.status)
            self.status = "exploratory"

    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs + self.tol)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["margin"] = self.margin
        out["passed"] = self.passed
        return _jsonable(out)

    @classmethod
    def condition_not_met(cls, name: str, params: dict, details: dict | None = None) -> VerificationReport:
        return cls(name, math.nan, math.nan, params=params, details=details or {}, status="condition not met")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def reports_to_json(reports: Iterable[VerificationReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def summary_table(reports: Iterable[VerificationReport]) -> str:
    rows = [("check", "status", "lhs", "rhs", "margin")]
    for r in reports:
        rows.append((r.name, r.status, _fmt(r.lhs), _fmt(r.rhs), _fmt(r.margin)))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _fmt(x: float) -> str:
    return "-" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6g}"


def any_failed(reports: Iterable[VerificationReport]) -> bool:
    return any(r.status == "fail" for r in reports)
