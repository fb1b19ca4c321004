"""
抽象環境：セル → 抽象値 の永続マップと、パックごとの関係ドメインの値。

どちらも共有可能な平衡木（`PMap`）に入れるので、合併・比較は
2 つの環境で物理的に異なる部分だけを辿る。
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Optional, Sequence, Tuple

from ..frontend.ast import FLOAT
from ..numeric.clocked import ClockedValue
from ..numeric.intervals import Interval, IntInterval
from .cells import CLOCK, CellId
from .pmap import MISSING, PMap, VisitCounter

if TYPE_CHECKING:
    from ..context import AnalysisContext, Binding


@dataclass(frozen=True)
class CellValue:
    itv: Interval
    clocked: Optional[ClockedValue] = None

    def with_itv(self, itv: Interval) -> "CellValue":
        if self.clocked is not None and not itv.is_bottom:
            m = self.clocked.v.meet(itv)
            return CellValue(m, self.clocked.with_value(m))
        return CellValue(itv, self.clocked)

    def join(self, other: "CellValue") -> "CellValue":
        if self is other:
            return self
        clocked = self.clocked.join(other.clocked) if self.clocked is not None and other.clocked is not None else None
        return CellValue(self.itv.join(other.itv), clocked)

    def widen(self, other: "CellValue", ctx: "AnalysisContext") -> "CellValue":
        if self is other:
            return self
        clocked = None
        if self.clocked is not None and other.clocked is not None:
            clocked = self.clocked.widen(other.clocked, ctx.thresholds)
        return CellValue(self.itv.widen(other.itv, ctx.thresholds), clocked)

    def narrow(self, other: "CellValue", ctx: "AnalysisContext") -> "CellValue":
        if self is other:
            return self
        clocked = None
        if self.itv.is_int:
            m = ctx.machine
            itv = self.itv.narrow(other.itv, ctx.thresholds, (m.int_min, m.int_max))
            if self.clocked is not None and other.clocked is not None:
                clocked = self.clocked.narrow(other.clocked, ctx.thresholds, (m.int_min, m.int_max))
        else:
            itv = self.itv.narrow(other.itv, ctx.thresholds)
        return CellValue(itv, clocked)

    def leq(self, other: "CellValue") -> bool:
        if self is other:
            return True
        if not self.itv.leq(other.itv):
            return False
        if self.clocked is not None and other.clocked is not None:
            return self.clocked.leq(other.clocked)
        return True

    def __str__(self) -> str:
        if self.clocked is None:
            return str(self.itv)
        return f"{self.itv} (x-clock {self.clocked.vm}, x+clock {self.clocked.vp})"


def as_cell_interval(kind: str, itv: Interval) -> Interval:
    """セルの型に合わせた区間（整数セルには内側に丸めた整数区間）。"""
    if kind == FLOAT:
        return itv.to_float()
    if itv.is_int:
        return itv
    if itv.is_empty_range:
        return IntInterval.bottom()
    lo = itv.lo if math.isinf(itv.lo) else math.ceil(itv.lo)
    hi = itv.hi if math.isinf(itv.hi) else math.floor(itv.hi)
    return IntInterval(lo, hi) if lo <= hi else IntInterval.bottom()


def normalize(ctx: "AnalysisContext", cell: CellId, cv: CellValue, clock: Optional[IntInterval] = None) -> CellValue:
    """型の範囲への制限と時計付き成分による縮小。"""
    itv = cv.itv
    if cell == CLOCK:
        itv = itv.meet(ctx.clock_range)
    elif itv.is_int:
        itv = itv.clamp(ctx.machine)
    else:
        itv = itv.clamp()
    clocked = cv.clocked
    if clocked is not None and not itv.is_bottom:
        clocked = clocked.with_value(clocked.v.meet(itv)).reduce(clock if clock is not None else ctx.clock_range)
        itv = clocked.v
    if itv == cv.itv and clocked is cv.clocked:
        return cv
    return CellValue(itv, clocked)


class AbstractEnv:
    """セルの値とパックの値の組。不変で、更新は新しい環境を返す。"""

    __slots__ = ("cells", "stores", "is_bottom")

    def __init__(self, cells: PMap, stores: PMap, is_bottom: bool = False) -> None:
        self.cells = cells
        self.stores = stores
        self.is_bottom = is_bottom

    @classmethod
    def bottom(cls) -> "AbstractEnv":
        return _BOTTOM

    @classmethod
    def initial(cls, ctx: "AnalysisContext") -> "AbstractEnv":
        """すべてのセルが初期値（揮発性入力は宣言された範囲、その他は 0）の環境。"""
        items: List[Tuple[CellId, CellValue]] = []
        zero = IntInterval.const(0)
        for cell in ctx.layout.cells():
            itv = ctx.layout.initial_interval(cell)
            clocked = None
            if ctx.clocked and ctx.layout.info(cell).clocked:
                clocked = ClockedValue(itv, itv, itv)
            items.append((cell, CellValue(itv if cell != CLOCK else zero, clocked)))
        env = cls(PMap.from_items(sorted(items, key=lambda kv: kv[0])), PMap())
        for b in ctx.bindings:
            env = env.set_store(b.pack_id, b.domain.init_store(ctx, b.pack, env))
        return env

    # --- 参照と更新 ---

    def get(self, cell: CellId) -> CellValue:
        return self.cells[cell]

    def interval(self, cell: CellId) -> Interval:
        return self.cells[cell].itv

    def clocked(self, cell: CellId) -> Optional[ClockedValue]:
        return self.cells[cell].clocked

    @property
    def clock(self) -> IntInterval:
        return self.cells[CLOCK].itv

    def set_value(self, cell: CellId, cv: CellValue) -> "AbstractEnv":
        if cv.itv.is_bottom:
            return _BOTTOM
        if self.is_bottom:
            return self
        return AbstractEnv(self.cells.set(cell, cv), self.stores)

    def set_interval(self, cell: CellId, itv: Interval) -> "AbstractEnv":
        return self.set_value(cell, self.cells[cell].with_itv(itv))

    def store(self, pack_id: str) -> Any:
        return self.stores.get(pack_id)

    def set_store(self, pack_id: str, store: Any) -> "AbstractEnv":
        if self.is_bottom:
            return self
        return AbstractEnv(self.cells, self.stores.set(pack_id, store))

    def meet_interval(self, ctx: "AnalysisContext", cell: CellId, itv: Interval) -> "AbstractEnv":
        """cell の区間を itv との共通部分に絞る（型に合わせて丸める）。"""
        if self.is_bottom:
            return self
        cv = self.cells[cell]
        m = cv.itv.meet(as_cell_interval(ctx.layout.info(cell).ty, itv))
        if m == cv.itv:
            return self
        return self.set_value(cell, cv.with_itv(m))

    # --- 縮約（関係ドメイン → 区間） ---

    def reduce(self, ctx: "AnalysisContext", bindings: Iterable["Binding"]) -> "AbstractEnv":
        env = self
        for b in bindings:
            if env.is_bottom:
                return env
            store = env.stores.get(b.pack_id)
            r = b.domain.refine(ctx, env, store, b.pack)
            if r is None:
                return _BOTTOM
            store2, itvs = r
            if store2 is not store:
                env = env.set_store(b.pack_id, store2)
            for cell, itv in itvs.items():
                before = env.cells[cell].itv
                env = env.meet_interval(ctx, cell, itv)
                if env.is_bottom:
                    return env
                if env.cells[cell].itv != before:
                    ctx.mark_useful(b.pack_id)
        return env

    # --- 束演算 ---

    def _merge(self, ctx: "AnalysisContext", other: "AbstractEnv", cell_op, store_op, counter: Optional[VisitCounter]) -> "AbstractEnv":
        def cell_fn(cell, v1, v2):
            if v1 is MISSING:
                return v2
            if v2 is MISSING:
                return v1
            return normalize(ctx, cell, cell_op(v1, v2))

        cells = self.cells.merge(other.cells, cell_fn, counter)
        for cell, _, cv in self.cells.diff(cells):
            if cv is not MISSING and cv.itv.is_bottom:
                return _BOTTOM
        changed: List[str] = []

        def store_fn(pid, s1, s2):
            if s1 is MISSING:
                return s2
            if s2 is MISSING:
                return s1
            changed.append(pid)
            return store_op(ctx.binding(pid), s1, s2)

        stores = self.stores.merge(other.stores, store_fn, counter)
        env = AbstractEnv(cells, stores)
        if changed:
            env = env.reduce(ctx, [ctx.binding(pid) for pid in changed])
        return env

    def join(self, ctx: "AnalysisContext", other: "AbstractEnv", counter: Optional[VisitCounter] = None) -> "AbstractEnv":
        if self.is_bottom or self is other:
            return other
        if other.is_bottom:
            return self
        return self._merge(
            ctx,
            other,
            lambda v1, v2: v1.join(v2),
            lambda b, s1, s2: b.domain.join(ctx, s1, self, s2, other),
            counter,
        )

    def widen(self, ctx: "AnalysisContext", other: "AbstractEnv") -> "AbstractEnv":
        if self.is_bottom or self is other:
            return other
        if other.is_bottom:
            return self
        return self._merge(
            ctx,
            other,
            lambda v1, v2: v1.widen(v2, ctx),
            lambda b, s1, s2: b.domain.widen(ctx, s1, self, s2, other),
            None,
        )

    def narrow(self, ctx: "AnalysisContext", other: "AbstractEnv") -> "AbstractEnv":
        if self.is_bottom or other.is_bottom:
            return other
        if self is other:
            return self
        return self._merge(
            ctx,
            other,
            lambda v1, v2: v1.narrow(v2, ctx),
            lambda b, s1, s2: b.domain.narrow(ctx, s1, self, s2, other),
            None,
        )

    def leq(self, ctx: "AnalysisContext", other: "AbstractEnv") -> bool:
        if self.is_bottom or self is other:
            return True
        if other.is_bottom:
            return False
        for _, v1, v2 in self.cells.diff(other.cells):
            if v1 is MISSING or v2 is MISSING or not v1.leq(v2):
                return False
        for pid, s1, s2 in self.stores.diff(other.stores):
            if s1 is MISSING or s2 is MISSING:
                return False
            if not ctx.binding(pid).domain.leq(s1, s2):
                return False
        return True

    def unstable_cells(self, other: "AbstractEnv") -> List[CellId]:
        """other（次の反復の値）で self より大きくなったセル。"""
        if self.is_bottom or other.is_bottom:
            return []
        return [c for c, v1, v2 in self.cells.diff(other.cells) if v1 is not MISSING and v2 is not MISSING and not v2.leq(v1)]

    def perturb(self, ctx: "AnalysisContext", eps: float, base: Optional["AbstractEnv"] = None) -> "AbstractEnv":
        """浮動小数点セルの区間を相対 eps だけ広げる（base と異なるセルのみ）。"""
        if self.is_bottom or eps == 0.0:
            return self
        if base is None or base.is_bottom:
            targets = list(self.cells.items())
        else:
            targets = [(c, v) for c, v, _ in self.cells.diff(base.cells) if v is not MISSING]
        cells = self.cells
        for cell, cv in targets:
            if not cv.itv.is_int:
                cells = cells.set(cell, CellValue(cv.itv.perturb(eps).clamp(), cv.clocked))
        return AbstractEnv(cells, self.stores) if cells is not self.cells else self

    def tick(self, ctx: "AnalysisContext") -> "AbstractEnv":
        """wait_tick：clock ≤ max_ticks - 1 の状態だけが進み、clock が 1 増える。"""
        if self.is_bottom:
            return self
        clock = self.clock.meet(IntInterval(0, ctx.clock.max_ticks - 1))
        if clock.is_bottom:
            return _BOTTOM
        clock = IntInterval(clock.lo + 1, clock.hi + 1)
        cells = self.cells.set(CLOCK, CellValue(clock))
        for cell, cv in self.cells.items():
            if cv.clocked is not None:
                cells = cells.set(cell, normalize(ctx, cell, CellValue(cv.itv, cv.clocked.tick()), clock))
        return AbstractEnv(cells, self.stores)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AbstractEnv):
            return NotImplemented
        if self.is_bottom or other.is_bottom:
            return self.is_bottom == other.is_bottom
        return self.cells == other.cells and self.stores == other.stores

    __hash__ = None  # type: ignore[assignment]

    # --- 具体状態との比較・表示 ---

    def contains(self, ctx: "AnalysisContext", values: Dict[CellId, Sequence[Any]]) -> bool:
        """具体状態（セル → 値の一覧）がこの環境の表す集合に入るか。"""
        if self.is_bottom:
            return False
        clock = values.get(CLOCK, [0])[0]
        for cell, vals in values.items():
            cv = self.cells.get(cell)
            if cv is None:
                continue
            for x in vals:
                if not cv.itv.contains(x):
                    return False
                if cv.clocked is not None and not cv.clocked.contains(x, clock):
                    return False
        for b in ctx.bindings:
            store = self.stores.get(b.pack_id)
            if store is not None and not b.domain.contains(store, b.pack, values):
                return False
        return True

    def dump(self, ctx: "AnalysisContext") -> Dict[str, Any]:
        if self.is_bottom:
            return {"bottom": True}
        cells = {str(c): str(cv) for c, cv in self.cells.items()}
        packs = {}
        for b in ctx.bindings:
            store = self.stores.get(b.pack_id)
            if store is not None:
                lines = b.domain.dump(store, b.pack)
                if lines:
                    packs[b.pack_id] = lines
        return {"cells": cells, "packs": packs}

    def __repr__(self) -> str:
        if self.is_bottom:
            return "AbstractEnv(bottom)"
        return f"AbstractEnv({len(self.cells)} cells, {len(self.stores)} packs)"


_BOTTOM = AbstractEnv(PMap(), PMap(), is_bottom=True)
