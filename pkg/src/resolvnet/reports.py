"""Machine-readable check reports and deterministic CSV/JSON emission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class CheckReport:
    """Outcome of one inequality or convergence check.

    ``lhs``/``rhs_bound`` hold the computed sides where applicable; ``scan``
    holds per-scale rows (each with at least "S" and "gap"); ``slope`` is the
    fitted log-log decay slope of a scan.
    """

    name: str
    passed: bool
    lhs: float | None = None
    rhs_bound: float | None = None
    scan: list[dict] | None = None
    slope: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs_bound": self.rhs_bound,
            "scan": self.scan,
            "slope": self.slope,
            "pass": self.passed,
        }


def fitted_loglog_slope(x_values, y_values) -> float:
    """Least-squares slope of log(y) against log(x); 0 for a degenerate scan."""
    x = np.log(np.asarray(x_values, dtype=np.float64))
    y = np.log(np.maximum(np.asarray(y_values, dtype=np.float64), 1e-300))
    if x.size < 2 or np.ptp(x) == 0.0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def reports_to_json(reports: list[CheckReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"


def scan_to_csv(kind: str, scan: list[dict], slope: float | None) -> str:
    """CSV with one row per scan point plus a slope summary row."""
    lines = ["kind,S,gap"]
    for row in scan:
        lines.append(f"{kind},{row['S']!r},{row['gap']!r}")
    if slope is not None:
        lines.append(f"{kind},slope,{slope!r}")
    return "\n".join(lines) + "\n"


def rows_to_csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def summarize(reports: list[CheckReport]) -> str:
    lines = []
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        extra = ""
        if r.lhs is not None and r.rhs_bound is not None:
            extra = f" lhs={r.lhs:.3e} rhs={r.rhs_bound:.3e}"
        elif r.slope is not None:
            extra = f" slope={r.slope:.3f}"
        lines.append(f"[{status}] {r.name}{extra}")
    return "\n".join(lines)
