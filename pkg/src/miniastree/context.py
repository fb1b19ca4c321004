from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Set, Tuple

from .alarms import AlarmSink
from .memory.cells import CellId, Layout
from .numeric.clocked import ClockConfig
from .numeric.intervals import DEFAULT_MACHINE, Machine, ThresholdSet

if TYPE_CHECKING:
    from .domains import RelationalDomain
    from .packing import Pack


@dataclass(frozen=True)
class Binding:
    # 関係ドメインとそれが受け持つパック
    domain: "RelationalDomain"
    pack: "Pack"

    @property
    def pack_id(self) -> str:
        return self.pack.id


@dataclass
class AnalysisStats:
    loops: int = 0
    iterations: int = 0
    widenings: int = 0
    delayed: int = 0
    narrowings: int = 0
    unrolled: int = 0
    max_partitions: int = 0


@dataclass
class AnalysisContext:
    """解析中に変わらない設定と、パック・セルの対応。"""

    layout: Layout
    machine: Machine = DEFAULT_MACHINE
    thresholds: ThresholdSet = field(default_factory=ThresholdSet.geometric)
    clock: ClockConfig = field(default_factory=ClockConfig)
    bindings: Tuple[Binding, ...] = ()
    linearize: bool = True
    clocked: bool = True
    # 検査モードのときだけ設定する
    alarms: Optional[AlarmSink] = None
    # 区間を実際に狭めた（またはガードを決定した）パックの id
    useful: Set[str] = field(default_factory=set)
    stats: AnalysisStats = field(default_factory=AnalysisStats)

    def __post_init__(self) -> None:
        self._by_cell: Dict[CellId, List[Binding]] = {}
        self._by_id: Dict[str, Binding] = {}
        for b in self.bindings:
            self._by_id[b.pack_id] = b
            for cell in b.pack.all_cells:
                self._by_cell.setdefault(cell, []).append(b)

    def bindings_for(self, cell: CellId) -> List[Binding]:
        return self._by_cell.get(cell, [])

    def binding(self, pack_id: str) -> Binding:
        return self._by_id[pack_id]

    def touching(self, cells) -> List[Binding]:
        """cells のどれかを含むパック（定義順、重複なし）。"""
        seen: Dict[str, Binding] = {}
        for c in cells:
            for b in self._by_cell.get(c, ()):
                seen.setdefault(b.pack_id, b)
        return [b for b in self.bindings if b.pack_id in seen]

    def mark_useful(self, pack_id: str) -> None:
        self.useful.add(pack_id)

    @property
    def checking(self) -> bool:
        return self.alarms is not None

    @property
    def clock_range(self):
        return self.clock.clock_range

    def with_alarms(self, alarms: Optional[AlarmSink]) -> "AnalysisContext":
        return replace(self, alarms=alarms)

    def interval_only(self) -> "AnalysisContext":
        """関係ドメインなし・線形化なし・警告なしの文脈（決定木の葉の計算用）。"""
        cached: Any = getattr(self, "_interval_only", None)
        if cached is None:
            cached = replace(self, bindings=(), linearize=False, alarms=None, useful=set())
            self._interval_only = cached
        return cached

