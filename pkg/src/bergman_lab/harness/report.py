"""Experiment reports: one row per verified quantity, CSV and JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field

SIGMA_THRESHOLD = 3.0

CSV_COLUMNS = ["quantity", "estimate", "std_error", "oracle", "provenance", "z", "pass"]


@dataclass
class ReportRow:
    """A single comparison.

    Monte Carlo rows pass when ``|z| <= 3``; deterministic rows (``tolerance``
    set) pass when ``|estimate - oracle| <= tolerance``. Informational rows
    never affect the overall verdict.
    """

    name: str
    estimate: float
    std_error: float
    oracle_value: float
    oracle_provenance: str
    tolerance: float | None = None
    informational: bool = False
    note: str = ""
    passed: bool = field(init=False)
    z_score: float = field(init=False)

    def __post_init__(self):
        diff = self.estimate - self.oracle_value
        if self.tolerance is not None:
            self.z_score = diff / self.tolerance if self.tolerance > 0 else (0.0 if diff == 0 else math.inf)
            self.passed = bool(abs(diff) <= self.tolerance)
        else:
            self.z_score = diff / self.std_error if self.std_error > 0 else (0.0 if diff == 0 else math.inf)
            self.passed = bool(abs(self.z_score) <= SIGMA_THRESHOLD)

    def line(self):
        tag = "info" if self.informational else ("PASS" if self.passed else "FAIL")
        unc = f"tol {self.tolerance:.1e}" if self.tolerance is not None else f"se {self.std_error:.3g}"
        return (
            f"[{tag}] {self.name}: {self.estimate:.6g} ({unc}) vs {self.oracle_value:.6g} "
            f"z={self.z_score:+.2f}  <{self.oracle_provenance}>"
        )


@dataclass
class ExperimentReport:
    name: str
    rows: list = field(default_factory=list)
    seed: int | None = None
    runtime: float = 0.0
    config: dict | None = None
    notes: dict = field(default_factory=dict)
    version: str = ""
    timestamp: float = field(default_factory=time.time)

    def add(self, *args, **kwargs):
        row = args[0] if args and isinstance(args[0], ReportRow) else ReportRow(*args, **kwargs)
        self.rows.append(row)
        return row

    def row(self, name):
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def passed(self):
        return all(r.passed for r in self.rows if not r.informational)

    def extend(self, other):
        self.rows.extend(other.rows)
        self.notes.update({f"{other.name}.{k}": v for k, v in other.notes.items()})
        self.runtime += other.runtime
        return self

    def summary_lines(self):
        out = [f"== {self.name} (seed={self.seed}, {self.runtime:.1f}s)"]
        out += [r.line() for r in self.rows]
        out.append(f"== overall: {'PASS' if self.passed else 'FAIL'}")
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.name, repr(r.estimate), repr(r.std_error), repr(r.oracle_value), r.oracle_provenance,
                 repr(r.z_score), "info" if r.informational else int(r.passed)]
            )
        return buf.getvalue()

    def to_dict(self, timestamp=True):
        d = {
            "name": self.name,
            "seed": self.seed,
            "version": self.version,
            "runtime": self.runtime,
            "passed": self.passed,
            "config": self.config,
            "notes": self.notes,
            "rows": [asdict(r) for r in self.rows],
        }
        if timestamp:
            d["timestamp"] = self.timestamp
        return d

    def to_json(self, timestamp=True):
        return json.dumps(_finite(self.to_dict(timestamp)), indent=2, sort_keys=True)


def _finite(obj):
    # JSON has no inf/nan
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj
