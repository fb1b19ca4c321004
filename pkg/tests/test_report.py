from __future__ import annotations

import json

import pytest

from miniastree.alarms import Alarm, AlarmKind, AlarmSink
from miniastree.frontend.ast import ProgramPoint
from miniastree.numeric.intervals import FloatInterval, IntInterval
from miniastree.report import SCHEMA_VERSION, Report, report_emit


def _alarm(line=3, kind=AlarmKind.DIV_ZERO, witness=IntInterval(0, 10)):
    return Alarm(ProgramPoint("a.mc", line, 7, uid=line), kind, "100 / x", witness)


class TestAlarmSink:
    """同じ点・同じ種類の警告は 1 つにまとまる。"""

    def test_dedupe_joins_witness(self):
        sink = AlarmSink()
        point = ProgramPoint("a.mc", 3, 7, uid=1)
        sink.record(point, AlarmKind.DIV_ZERO, "1 / x", IntInterval(0, 2))
        sink.record(point, AlarmKind.DIV_ZERO, "1 / x", IntInterval(-1, 0))
        sink.record(point, AlarmKind.OVERFLOW, "1 / x", IntInterval(0, 0))
        assert len(sink) == 2
        (div,) = [a for a in sink.sorted() if a.kind is AlarmKind.DIV_ZERO]
        assert div.witness == IntInterval(-1, 2)


class TestText:
    def test_format(self):
        report = Report("a.mc", [_alarm()])
        text = report_emit(report, "text").decode("utf-8")
        assert text == "a.mc:3:7: DIV_ZERO: 100 / x ([0, 10])\n1 alarm\n"
        assert report.exit_code == 1

    def test_clean(self):
        report = Report("a.mc", [])
        assert report_emit(report).decode("utf-8") == "0 alarms\n"
        assert report.exit_code == 0


class TestJson:
    def test_schema(self):
        report = Report("a.mc", [_alarm(witness=FloatInterval(0.0, float("inf")))], stats={"cells": 4})
        data = json.loads(report_emit(report, "json"))
        assert data["schema_version"] == SCHEMA_VERSION
        assert data["file"] == "a.mc"
        assert data["alarms"] == [
            {
                "file": "a.mc",
                "line": 3,
                "column": 7,
                "kind": "div_zero",
                "expr": "100 / x",
                "witness": {"lo": 0.0, "hi": "+inf"},
            }
        ]
        assert data["stats"] == {"cells": 4}
        assert "invariants" not in data

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            report_emit(Report("a.mc", []), "xml")


class TestAnalysisReport:
    """解析結果からのレポートは実行ごとに同じになる。"""

    def test_deterministic(self, analyze_source, corpus):
        first = analyze_source(corpus["div_zero"]).report().to_dict()
        second = analyze_source(corpus["div_zero"]).report().to_dict()
        first.pop("timing")
        second.pop("timing")
        assert first == second
        assert [a["kind"] for a in first["alarms"]] == ["div_zero"]

    def test_peak_memory(self, analyze_source, corpus):
        pytest.importorskip("resource")
        timing = analyze_source(corpus["clean"]).report().to_dict()["timing"]
        assert timing["elapsed_seconds"] >= 0.0
        assert timing["peak_memory_mib"] > 0.0

    def test_invariants_dump(self, analyze_source, corpus):
        report = analyze_source(corpus["narrowing"]).report(include_invariants=True)
        assert report.invariants
        assert any(label.endswith(" head") for label in report.invariants)
