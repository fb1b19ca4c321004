"""
解析結果のレポートと、その書き出し（テキスト / JSON）。

JSON の形は `SCHEMA_VERSION` で版を付ける。時間とメモリ以外のフィールドは、
同じ入力と設定なら実行ごとに同じになる。
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .alarms import Alarm
from .numeric.intervals import bound_to_json

SCHEMA_VERSION = 1


@dataclass
class Report:
    file: str
    alarms: List[Alarm]
    stats: Dict[str, Any] = field(default_factory=dict)
    useful_packs: List[str] = field(default_factory=list)
    pruned_inputs: List[str] = field(default_factory=list)
    invariants: Optional[Dict[str, Any]] = None
    timing: Dict[str, float] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 1 if self.alarms else 0

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "file": self.file,
            "alarms": [alarm_to_dict(a) for a in self.alarms],
            "stats": self.stats,
            "useful_packs": list(self.useful_packs),
            "pruned_inputs": list(self.pruned_inputs),
            "timing": self.timing,
        }
        if self.invariants is not None:
            out["invariants"] = self.invariants
        return out


def alarm_to_dict(a: Alarm) -> Dict[str, Any]:
    w = a.witness
    return {
        "file": a.point.file,
        "line": a.point.line,
        "column": a.point.column,
        "kind": a.kind.label,
        "expr": a.expr,
        "witness": {"lo": bound_to_json(w.lo), "hi": bound_to_json(w.hi)},
    }


def _summary(n: int) -> str:
    return f"{n} alarm" if n == 1 else f"{n} alarms"


def format_text(report: Report) -> str:
    lines = [a.format() for a in report.alarms]
    lines.append(_summary(len(report.alarms)))
    return "\n".join(lines) + "\n"


def format_json(report: Report) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_emit(report: Report, format: str = "text") -> bytes:
    if format == "json":
        return format_json(report).encode("utf-8")
    if format == "text":
        return format_text(report).encode("utf-8")
    raise ValueError(f"unknown report format: {format}")
