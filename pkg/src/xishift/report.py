"""Verification entries and reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional


@dataclass
class Check:
    """One identity evaluated on one instance.

    ``anchor`` names the identity being checked; ``passed`` is
    ``residual <= tolerance``.
    """

    suite: str
    name: str
    anchor: str
    residual: float
    tolerance: float
    value: Optional[float] = None
    timing: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def as_dict(self, with_timing=False):
        d = {
            "suite": self.suite,
            "name": self.name,
            "anchor": self.anchor,
            "residual": _num(self.residual),
            "tolerance": _num(self.tolerance),
            "passed": self.passed,
            "value": None if self.value is None else _num(self.value),
        }
        if with_timing:
            d["timing"] = self.timing
        return d


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class VerificationReport:
    entries: List[Check] = field(default_factory=list)

    def extend(self, checks):
        self.entries.extend(checks)

    @property
    def n_passed(self):
        return sum(c.passed for c in self.entries)

    @property
    def n_failed(self):
        return len(self.entries) - self.n_passed

    @property
    def ok(self):
        return self.n_failed == 0

    def summary(self):
        return {"total": len(self.entries), "passed": self.n_passed, "failed": self.n_failed}

    def to_json(self, with_timing=False) -> str:
        doc = {
            "summary": self.summary(),
            "entries": [c.as_dict(with_timing) for c in self.entries],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_csv(self, with_timing=False) -> str:
        cols = ["suite", "name", "anchor", "residual", "tolerance", "passed", "value"]
        if with_timing:
            cols.append("timing")
        lines = [",".join(cols)]
        for c in self.entries:
            d = c.as_dict(with_timing)
            row = []
            for col in cols:
                v = d[col]
                if isinstance(v, bool):
                    row.append("true" if v else "false")
                elif isinstance(v, float):
                    row.append(format(v, ".17g"))
                elif v is None:
                    row.append("")
                else:
                    row.append(_csv_text(str(v)))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _csv_text(s):
    if any(ch in s for ch in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s
