"""Uniform result records for the inequality checkers.

Every check in the package reduces to comparing a left-hand side against a
right-hand side with a tolerance; CheckReport freezes that comparison plus
whatever intermediate quantities went into it.  Serialization is
deterministic (sorted keys, fixed float formatting, no timestamps) so that
reports can be diffed byte-for-byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

PASS = "PASS"
FAIL = "FAIL"
NOT_APPLICABLE = "NOT_APPLICABLE"


def _fmt(x):
    """Canonical float formatting: repr of the shortest round-trip value."""
    if isinstance(x, float):
        if math.isnan(x):
            return None
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    return x


@dataclass
class CheckReport:
    """Outcome of a single inequality check.

    ``slack`` is rhs - lhs for checks of the form lhs <= rhs, so PASS means
    slack >= -tol.  ``metadata`` carries the constants and intermediate
    quantities actually used, for reproducibility.
    """
    name: str
    lhs: float
    rhs: float
    tol: float
    verdict: str
    metadata: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        return self.verdict == PASS

    def to_dict(self):
        return {
            "name": self.name,
            "lhs": _fmt(float(self.lhs)),
            "rhs": _fmt(float(self.rhs)),
            "slack": _fmt(float(self.rhs - self.lhs)),
            "tol": _fmt(float(self.tol)),
            "verdict": self.verdict,
            "metadata": _fmt(self.metadata),
        }

    def summary_line(self):
        return (f"[{self.verdict}] {self.name}: lhs={self.lhs:.6g} "
                f"rhs={self.rhs:.6g} slack={self.rhs - self.lhs:.6g}")


def verdict_from_slack(slack, tol):
    return PASS if slack >= -tol else FAIL


def make_report(name, lhs, rhs, tol, metadata=None, applicable=True):
    """Standard construction: PASS iff lhs <= rhs + tol."""
    if not applicable:
        v = NOT_APPLICABLE
    else:
        v = verdict_from_slack(rhs - lhs, tol)
    return CheckReport(name, float(lhs), float(rhs), float(tol), v,
                       dict(metadata or {}))


def reports_to_json(reports, extra=None):
    """Deterministic JSON for a list of CheckReports."""
    doc = {"schema_version": 1, "checks": [r.to_dict() for r in reports]}
    if extra:
        doc.update(_fmt(extra))
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
