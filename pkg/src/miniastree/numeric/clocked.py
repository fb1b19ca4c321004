"""
時計付き区間：整数セル x について (x, x - clock, x + clock) の 3 つの区間を持つ。

clock は `wait_tick` のたびに 1 増える隠し変数で、0 ≤ clock ≤ max_ticks。
1 tick に高々 1 回しか増えないカウンタは x - clock が増えないので、
x 自体の上限が max_ticks 程度に抑えられる。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

from ..frontend.ast import Binary, Const, Expr, VarRef
from .intervals import Bound, IntInterval, ThresholdSet


@dataclass(frozen=True)
class ClockConfig:
    max_ticks: int = 1_000_000

    def __post_init__(self) -> None:
        if self.max_ticks < 0:
            raise ValueError("max_ticks must be >= 0")

    @property
    def clock_range(self) -> IntInterval:
        return IntInterval(0, self.max_ticks)


def _shift(a: IntInterval, k: int) -> IntInterval:
    if a.is_bottom:
        return a
    return IntInterval(a.lo + k, a.hi + k)


def _add(a: IntInterval, b: IntInterval) -> IntInterval:
    if a.is_bottom or b.is_bottom:
        return IntInterval.bottom()
    return IntInterval(a.lo + b.lo, a.hi + b.hi)


def _sub(a: IntInterval, b: IntInterval) -> IntInterval:
    if a.is_bottom or b.is_bottom:
        return IntInterval.bottom()
    return IntInterval(a.lo - b.hi, a.hi - b.lo)


@dataclass(frozen=True)
class ClockedValue:
    v: IntInterval
    vm: IntInterval  # x - clock
    vp: IntInterval  # x + clock

    @classmethod
    def from_value(cls, v: IntInterval, clock: IntInterval) -> "ClockedValue":
        """v と時計の範囲だけから v± を作り直す（情報のない持ち上げ）。"""
        return cls(v, _sub(v, clock), _add(v, clock))

    @property
    def is_bottom(self) -> bool:
        return self.v.is_bottom or self.vm.is_bottom or self.vp.is_bottom

    def shifted(self, k: int) -> "ClockedValue":
        # x := x + k は 3 成分とも正確にずれる
        return ClockedValue(_shift(self.v, k), _shift(self.vm, k), _shift(self.vp, k))

    def with_value(self, v: IntInterval) -> "ClockedValue":
        return ClockedValue(v, self.vm, self.vp)

    def tick(self) -> "ClockedValue":
        return ClockedValue(self.v, _shift(self.vm, -1), _shift(self.vp, 1))

    def reduce(self, clock: IntInterval) -> "ClockedValue":
        """v ∩ (v- + clock) ∩ (v+ - clock)。v± は変えない。"""
        if self.is_bottom or clock.is_bottom:
            return ClockedValue(IntInterval.bottom(), self.vm, self.vp)
        v = self.v.meet(_add(self.vm, clock)).meet(_sub(self.vp, clock))
        if v == self.v:
            return self
        return ClockedValue(v, self.vm, self.vp)

    def join(self, other: "ClockedValue") -> "ClockedValue":
        if self is other:
            return self
        return ClockedValue(self.v.join(other.v), self.vm.join(other.vm), self.vp.join(other.vp))

    def widen(self, new: "ClockedValue", thresholds: ThresholdSet) -> "ClockedValue":
        return ClockedValue(
            self.v.widen(new.v, thresholds),
            self.vm.widen(new.vm, thresholds),
            self.vp.widen(new.vp, thresholds),
        )

    def narrow(self, new: "ClockedValue", thresholds: Optional[ThresholdSet] = None, limits: Tuple[Bound, ...] = ()) -> "ClockedValue":
        return ClockedValue(
            self.v.narrow(new.v, thresholds, limits),
            self.vm.narrow(new.vm, thresholds),
            self.vp.narrow(new.vp, thresholds),
        )

    def leq(self, other: "ClockedValue") -> bool:
        return self.v.leq(other.v) and self.vm.leq(other.vm) and self.vp.leq(other.vp)

    def contains(self, x: int, clock: int) -> bool:
        return self.v.contains(x) and self.vm.contains(x - clock) and self.vp.contains(x + clock)

    def __str__(self) -> str:
        return f"{self.v} (x-clock {self.vm}, x+clock {self.vp})"


def match_shift(e: Expr) -> Optional[Tuple[str, int]]:
    """`y`、`y + k`、`k + y`、`y - k`（k は整数定数）なら (y の変数 id, k)。"""
    if isinstance(e, VarRef):
        return (e.var, 0) if e.var is not None else None
    if isinstance(e, Binary) and e.op in ("+", "-"):
        left, right = e.left, e.right
        if isinstance(left, VarRef) and isinstance(right, Const) and isinstance(right.value, int) and not isinstance(right.value, bool):
            return left.var, right.value if e.op == "+" else -right.value
        if e.op == "+" and isinstance(right, VarRef) and isinstance(left, Const) and isinstance(left.value, int) and not isinstance(left.value, bool):
            return right.var, left.value
    return None


def lift_assign(
    rhs: Expr,
    value: IntInterval,
    clock: IntInterval,
    clocked_of: Callable[[str], Optional[ClockedValue]],
) -> ClockedValue:
    """
    代入 x := rhs の後の x の 3 成分。

    rhs が時計付きの y のコピーか y ± 定数なら y の 3 成分をずらして使い、
    それ以外は区間評価の結果 value から作り直す。
    """
    m = match_shift(rhs)
    if m is not None:
        src = clocked_of(m[0])
        if src is not None and not src.is_bottom:
            t = src.shifted(m[1])
            return t.with_value(t.v.meet(value)).reduce(clock)
    return ClockedValue.from_value(value, clock)
