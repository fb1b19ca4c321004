from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto
from typing import TYPE_CHECKING, Dict, List, Tuple

if TYPE_CHECKING:
    from .frontend.ast import ProgramPoint
    from .numeric.intervals import Interval


class AlarmKind(Enum):
    # 検査モードで報告する実行時エラーの種類
    OVERFLOW = auto()
    DIV_ZERO = auto()
    ARRAY_BOUNDS = auto()
    SHIFT = auto()
    NAN = auto()

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Alarm:
    # 演算子適用ごとの警告（点・種類・式・証拠となる区間）
    point: "ProgramPoint"
    kind: AlarmKind
    expr: str
    witness: "Interval"

    def sort_key(self) -> tuple:
        return (self.point.file, self.point.line, self.point.column, self.point.uid, self.kind.value)

    def format(self) -> str:
        return f"{self.point.file}:{self.point.line}:{self.point.column}: {self.kind.name}: {self.expr} ({self.witness})"


class AlarmSink:
    """検査モードで出た警告の集まり。同じ点・同じ種類の警告は 1 つにまとめ、証拠区間を合併する。"""

    def __init__(self) -> None:
        self._alarms: Dict[Tuple[int, AlarmKind], Alarm] = {}

    def record(self, point: "ProgramPoint", kind: AlarmKind, expr: str, witness: "Interval") -> None:
        key = (point.uid, kind)
        old = self._alarms.get(key)
        if old is not None:
            witness = old.witness.join(witness)
        self._alarms[key] = Alarm(point, kind, expr, witness)

    def __len__(self) -> int:
        return len(self._alarms)

    def sorted(self) -> List[Alarm]:
        return sorted(self._alarms.values(), key=Alarm.sort_key)
