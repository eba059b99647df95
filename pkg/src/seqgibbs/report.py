"""Report records and deterministic CSV / JSON emission."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class CheckRecord:
    name: str
    passed: bool
    value: object = None
    bound: object = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": _plain(self.value),
                "bound": _plain(self.bound), "detail": self.detail}


@dataclass
class Report:
    experiment: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    checks: list[CheckRecord] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    inputs_digest: str = ""
    seed: int | None = None

    def check(self, name: str, passed: bool, value=None, bound=None, detail: str = "") -> bool:
        self.checks.append(CheckRecord(name, bool(passed), value, bound, detail))
        return bool(passed)

    def add_row(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} fields, header has {len(self.columns)}")
        self.rows.append(list(values))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def digest(obj) -> str:
    blob = json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.15g}"
    if v is None:
        return ""
    if isinstance(v, (tuple, list)):
        return " ".join(format_value(x) for x in v)
    return str(v)


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isfinite(v):
            return float(f"{v:.15g}")
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def emit_csv(report: Report, path: str | Path) -> Path:
    path = Path(path)
    lines = [",".join(report.columns)]
    lines += [",".join(_csv_field(format_value(v)) for v in row) for row in report.rows]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _csv_field(s: str) -> str:
    return f'"{s}"' if ("," in s or '"' in s) else s


def emit_json(report: Report, path: str | Path, version: str = "") -> Path:
    path = Path(path)
    doc = {
        "experiment": report.experiment,
        "passed": report.passed,
        "checks": [c.as_dict() for c in report.checks],
        "summary": _plain(report.summary),
        "inputs_digest": report.inputs_digest,
        "environment": {"package_version": version, "seed": report.seed},
        "columns": report.columns,
        "n_rows": len(report.rows),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return path
