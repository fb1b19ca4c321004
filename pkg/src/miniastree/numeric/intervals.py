"""
整数区間と IEEE 倍精度区間。

すべての転送関数は外向きに丸める（下端は -inf 方向、上端は +inf 方向）。
エラーになりうる具体的結果（ゼロ除算、オーバーフローなど）はフラグで報告し、
結果区間からは除外する（エラーでない継続のみを表す）。
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Optional, Tuple, Union

from ..alarms import AlarmKind
from . import floats as fl
from .floats import DBL_MAX, DENORM_MIN, INF, FloatModel

Bound = Union[int, float]
Flags = FrozenSet[AlarmKind]
NO_FLAGS: Flags = frozenset()

COMPARISONS = ("<", "<=", "==", "!=", ">", ">=")
_NEGATED = {"<": ">=", "<=": ">", "==": "!=", "!=": "==", ">": "<=", ">=": "<"}
_SWAPPED = {"<": ">", "<=": ">=", "==": "==", "!=": "!=", ">": "<", ">=": "<="}


def negate_cmp(op: str) -> str:
    return _NEGATED[op]


def swap_cmp(op: str) -> str:
    return _SWAPPED[op]


@dataclass(frozen=True)
class Machine:
    # 解析対象の算術型の大きさ（既定は 32bit int と倍精度 float）
    int_bits: int = 32
    float_model: FloatModel = field(default_factory=FloatModel)

    @property
    def int_min(self) -> int:
        return -(1 << (self.int_bits - 1))

    @property
    def int_max(self) -> int:
        return (1 << (self.int_bits - 1)) - 1


DEFAULT_MACHINE = Machine()


# --- しきい値集合 -------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdSet:
    values: Tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(sorted(set(self.values) | {-INF, INF}))
        object.__setattr__(self, "values", vals)

    @classmethod
    def geometric(cls, alpha: float = 1.0, lam: float = 2.0, count: int = 60) -> "ThresholdSet":
        """(±α·λ^k)_{0≤k≤N} に ±inf を加えた集合。"""
        if alpha <= 0 or lam <= 1 or count < 0:
            raise ValueError("threshold parameters need alpha > 0, lambda > 1, count >= 0")
        vals = []
        v = float(alpha)
        for _ in range(count + 1):
            vals.extend((v, -v))
            v = v * lam
            if math.isinf(v):
                break
        return cls(tuple(vals))

    def __len__(self) -> int:
        return len(self.values)

    def __contains__(self, x: object) -> bool:
        return x in self.values

    def above(self, x: float) -> float:
        # min{h ∈ T | h ≥ x}
        i = bisect.bisect_left(self.values, x)
        return self.values[i] if i < len(self.values) else INF

    def below(self, x: float) -> float:
        # max{ℓ ∈ T | ℓ ≤ x}
        i = bisect.bisect_right(self.values, x)
        return self.values[i - 1] if i > 0 else -INF


# --- 区間型 ---------------------------------------------------------------------


def _fmt(b: Bound) -> str:
    if isinstance(b, float):
        if math.isinf(b):
            return "-inf" if b < 0 else "+inf"
        return repr(b)
    return str(b)


def bound_to_json(b: Bound) -> Union[int, float, str]:
    if isinstance(b, float) and math.isinf(b):
        return "-inf" if b < 0 else "+inf"
    return b


@dataclass(frozen=True)
class FloatInterval:
    lo: float
    hi: float
    maybe_nan: bool = False

    is_int = False

    @classmethod
    def bottom(cls) -> "FloatInterval":
        return _FLOAT_BOTTOM

    @classmethod
    def top(cls) -> "FloatInterval":
        return cls(-DBL_MAX, DBL_MAX)

    @classmethod
    def const(cls, x: float) -> "FloatInterval":
        return cls(float(x), float(x))

    @classmethod
    def of(cls, lo: float, hi: float) -> "FloatInterval":
        return cls(float(lo), float(hi))

    @property
    def is_bottom(self) -> bool:
        return self.lo > self.hi and not self.maybe_nan

    @property
    def is_empty_range(self) -> bool:
        return self.lo > self.hi

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi and not self.maybe_nan

    @property
    def magnitude(self) -> float:
        if self.is_empty_range:
            return 0.0
        return max(abs(self.lo), abs(self.hi))

    def contains(self, x: float) -> bool:
        if x != x:
            return self.maybe_nan
        return self.lo <= x <= self.hi

    def leq(self, other: "FloatInterval") -> bool:
        if self.maybe_nan and not other.maybe_nan:
            return False
        if self.is_empty_range:
            return True
        return other.lo <= self.lo and self.hi <= other.hi

    def join(self, other: "FloatInterval") -> "FloatInterval":
        if self is other or other.is_bottom:
            return self
        if self.is_bottom:
            return other
        nan = self.maybe_nan or other.maybe_nan
        if self.is_empty_range:
            return FloatInterval(other.lo, other.hi, nan)
        if other.is_empty_range:
            return FloatInterval(self.lo, self.hi, nan)
        return FloatInterval(min(self.lo, other.lo), max(self.hi, other.hi), nan)

    def meet(self, other: "FloatInterval") -> "FloatInterval":
        r = FloatInterval(max(self.lo, other.lo), min(self.hi, other.hi), self.maybe_nan and other.maybe_nan)
        return _FLOAT_BOTTOM if r.is_bottom else r

    def widen(self, new: "FloatInterval", thresholds: ThresholdSet) -> "FloatInterval":
        if self.is_bottom:
            return new
        if new.is_bottom or new.is_empty_range:
            return FloatInterval(self.lo, self.hi, self.maybe_nan or new.maybe_nan)
        if self.is_empty_range:
            return FloatInterval(new.lo, new.hi, True)
        lo = thresholds.below(new.lo) if new.lo < self.lo else self.lo
        hi = thresholds.above(new.hi) if new.hi > self.hi else self.hi
        return FloatInterval(lo, hi, self.maybe_nan or new.maybe_nan)

    def narrow(self, new: "FloatInterval", thresholds: Optional[ThresholdSet] = None) -> "FloatInterval":
        if self.is_bottom or new.is_bottom:
            return new
        lo = max(self.lo, new.lo) if _replaceable(self.lo, thresholds, DBL_MAX) else self.lo
        hi = min(self.hi, new.hi) if _replaceable(self.hi, thresholds, DBL_MAX) else self.hi
        return FloatInterval(lo, hi, self.maybe_nan and new.maybe_nan)

    def clamp(self) -> "FloatInterval":
        """有限な値の範囲に制限する（エラーでない継続）。"""
        lo, hi = max(self.lo, -DBL_MAX), min(self.hi, DBL_MAX)
        if lo == self.lo and hi == self.hi:
            return self
        r = FloatInterval(lo, hi, self.maybe_nan)
        return _FLOAT_BOTTOM if r.is_bottom else r

    def perturb(self, eps: float) -> "FloatInterval":
        # [a - ε|a|, b + ε|b|]
        if self.is_empty_range or eps == 0.0:
            return self
        lo = fl.sub_down(self.lo, fl.mul_up(eps, abs(self.lo)))
        hi = fl.add_up(self.hi, fl.mul_up(eps, abs(self.hi)))
        return FloatInterval(lo, hi, self.maybe_nan)

    def to_float(self) -> "FloatInterval":
        return self

    def __str__(self) -> str:
        if self.is_bottom:
            return "bottom"
        s = f"[{_fmt(self.lo)}, {_fmt(self.hi)}]"
        return s + "+nan" if self.maybe_nan else s


_FLOAT_BOTTOM = FloatInterval(INF, -INF)


@dataclass(frozen=True)
class IntInterval:
    lo: Bound
    hi: Bound

    is_int = True
    maybe_nan = False

    @classmethod
    def bottom(cls) -> "IntInterval":
        return _INT_BOTTOM

    @classmethod
    def top(cls, machine: Machine = DEFAULT_MACHINE) -> "IntInterval":
        return cls(machine.int_min, machine.int_max)

    @classmethod
    def unbounded(cls) -> "IntInterval":
        return cls(-INF, INF)

    @classmethod
    def const(cls, x: int) -> "IntInterval":
        return cls(int(x), int(x))

    @classmethod
    def of(cls, lo: Bound, hi: Bound) -> "IntInterval":
        return cls(_int_bound(lo), _int_bound(hi))

    @property
    def is_bottom(self) -> bool:
        return self.lo > self.hi

    is_empty_range = is_bottom

    @property
    def is_singleton(self) -> bool:
        return self.lo == self.hi

    @property
    def magnitude(self) -> float:
        if self.is_bottom:
            return 0.0
        return float(max(abs(self.lo), abs(self.hi)))

    def contains(self, x: int) -> bool:
        return self.lo <= x <= self.hi

    def leq(self, other: "IntInterval") -> bool:
        if self.is_bottom:
            return True
        return other.lo <= self.lo and self.hi <= other.hi

    def join(self, other: "IntInterval") -> "IntInterval":
        if self is other or other.is_bottom:
            return self
        if self.is_bottom:
            return other
        return IntInterval(min(self.lo, other.lo), max(self.hi, other.hi))

    def meet(self, other: "IntInterval") -> "IntInterval":
        r = IntInterval(max(self.lo, other.lo), min(self.hi, other.hi))
        return _INT_BOTTOM if r.is_bottom else r

    def widen(self, new: "IntInterval", thresholds: ThresholdSet) -> "IntInterval":
        if self.is_bottom:
            return new
        if new.is_bottom:
            return self
        lo = _int_bound(math.floor(thresholds.below(new.lo)) if math.isfinite(thresholds.below(new.lo)) else -INF) if new.lo < self.lo else self.lo
        hi = _int_bound(math.ceil(thresholds.above(new.hi)) if math.isfinite(thresholds.above(new.hi)) else INF) if new.hi > self.hi else self.hi
        return IntInterval(lo, hi)

    def narrow(self, new: "IntInterval", thresholds: Optional[ThresholdSet] = None, limits: Iterable[Bound] = ()) -> "IntInterval":
        if self.is_bottom or new.is_bottom:
            return new
        limits = tuple(limits)
        lo = max(self.lo, new.lo) if _replaceable(self.lo, thresholds, None, limits) else self.lo
        hi = min(self.hi, new.hi) if _replaceable(self.hi, thresholds, None, limits) else self.hi
        return IntInterval(lo, hi)

    def clamp(self, machine: Machine = DEFAULT_MACHINE) -> "IntInterval":
        lo, hi = max(self.lo, machine.int_min), min(self.hi, machine.int_max)
        if lo == self.lo and hi == self.hi:
            return self
        r = IntInterval(lo, hi)
        return _INT_BOTTOM if r.is_bottom else r

    def to_float(self) -> FloatInterval:
        if self.is_bottom:
            return FloatInterval.bottom()
        return FloatInterval(_float_down(self.lo), _float_up(self.hi))

    def __str__(self) -> str:
        if self.is_bottom:
            return "bottom"
        return f"[{_fmt(self.lo)}, {_fmt(self.hi)}]"


_INT_BOTTOM = IntInterval(1, 0)

Interval = Union[FloatInterval, IntInterval]


def _int_bound(x: Bound) -> Bound:
    if isinstance(x, float):
        if math.isinf(x):
            return x
        return int(x)
    return x


def _float_down(x: Bound) -> float:
    if isinstance(x, float):
        return x
    f = float(x)
    return fl.next_down(f) if f > x else f


def _float_up(x: Bound) -> float:
    if isinstance(x, float):
        return x
    f = float(x)
    return fl.next_up(f) if f < x else f


def _replaceable(b: Bound, thresholds: Optional[ThresholdSet], dbl: Optional[float], limits: Tuple[Bound, ...] = ()) -> bool:
    # 無限大・しきい値・型の端点は縮小で置き換えてよい
    if isinstance(b, float) and math.isinf(b):
        return True
    if dbl is not None and abs(b) == dbl:
        return True
    if b in limits:
        return True
    return thresholds is not None and b in thresholds


def top_of(kind: str, machine: Machine = DEFAULT_MACHINE) -> Interval:
    if kind == "float":
        return FloatInterval.top()
    if kind == "bool":
        return IntInterval(0, 1)
    return IntInterval.top(machine)


# --- 算術 -----------------------------------------------------------------------


def _ints_clamped(lo: Bound, hi: Bound, machine: Machine) -> Tuple[IntInterval, Flags]:
    flags = NO_FLAGS
    if hi > machine.int_max or lo < machine.int_min:
        flags = frozenset({AlarmKind.OVERFLOW})
    r = IntInterval(max(lo, machine.int_min), min(hi, machine.int_max))
    return (_INT_BOTTOM if r.is_bottom else r), flags


def _floats_clamped(lo: float, hi: float, nan: bool, flags: Flags) -> Tuple[FloatInterval, Flags]:
    if lo < -DBL_MAX or hi > DBL_MAX:
        flags = flags | {AlarmKind.OVERFLOW}
    # NaN はエラーとして報告し、続きの値からは除く
    r = FloatInterval(max(lo, -DBL_MAX), min(hi, DBL_MAX))
    if nan:
        flags = flags | {AlarmKind.NAN}
    return (_FLOAT_BOTTOM if r.is_bottom else r), flags


def _imul(a: Bound, b: Bound) -> Bound:
    if a == 0 or b == 0:
        return 0
    return a * b


def _trunc_div(a: Bound, b: Bound) -> Bound:
    # C の除算（0 方向への切り捨て）
    if isinstance(a, float) or isinstance(b, float):
        if math.isinf(b):
            return 0
        q = a / b
        return q if math.isinf(q) else math.trunc(q)
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def _nonzero_parts(b: Interval) -> list:
    parts = []
    if b.is_int:
        if b.lo <= -1:
            parts.append(IntInterval(b.lo, min(b.hi, -1)))
        if b.hi >= 1:
            parts.append(IntInterval(max(b.lo, 1), b.hi))
    else:
        if b.lo < 0:
            parts.append(FloatInterval(b.lo, min(b.hi, -DENORM_MIN)))
        if b.hi > 0:
            parts.append(FloatInterval(max(b.lo, DENORM_MIN), b.hi))
    return parts


def _int_arith(op: str, a: IntInterval, b: Optional[IntInterval], machine: Machine) -> Tuple[IntInterval, Flags]:
    if op == "neg":
        return _ints_clamped(-a.hi, -a.lo, machine)
    if op in ("cast_int", "cast_bool"):
        return a, NO_FLAGS
    assert b is not None
    if op == "+":
        return _ints_clamped(a.lo + b.lo, a.hi + b.hi, machine)
    if op == "-":
        return _ints_clamped(a.lo - b.hi, a.hi - b.lo, machine)
    if op == "*":
        ps = [_imul(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
        return _ints_clamped(min(ps), max(ps), machine)
    if op in ("/", "%"):
        flags = NO_FLAGS
        if b.contains(0):
            flags = frozenset({AlarmKind.DIV_ZERO})
        result: IntInterval = _INT_BOTTOM
        for part in _nonzero_parts(b):
            if op == "/":
                qs = [_trunc_div(x, y) for x in (a.lo, a.hi) for y in (part.lo, part.hi)]
                r, f = _ints_clamped(min(qs), max(qs), machine)
            else:
                r, f = _int_mod(a, part, machine)
            result = result.join(r)
            flags = flags | f
        return result, flags
    if op in ("<<", ">>"):
        flags = NO_FLAGS
        if b.lo < 0 or b.hi > machine.int_bits - 1:
            flags = frozenset({AlarmKind.SHIFT})
        s = b.meet(IntInterval(0, machine.int_bits - 1))
        if s.is_bottom:
            return _INT_BOTTOM, flags
        if op == "<<":
            cs = [_imul(x, 1 << int(y)) for x in (a.lo, a.hi) for y in (s.lo, s.hi)]
            r, f = _ints_clamped(min(cs), max(cs), machine)
            return r, flags | f
        cs = [(x >> int(y)) if not isinstance(x, float) else x for x in (a.lo, a.hi) for y in (s.lo, s.hi)]
        return IntInterval(min(cs), max(cs)), flags
    raise ValueError(f"unknown integer operator {op}")


def _int_mod(a: IntInterval, b: IntInterval, machine: Machine) -> Tuple[IntInterval, Flags]:
    flags = NO_FLAGS
    if a.contains(machine.int_min) and b.contains(-1):
        flags = frozenset({AlarmKind.OVERFLOW})
    if a.is_singleton and b.is_singleton:
        x, y = a.lo, b.lo
        if x == machine.int_min and y == -1:
            return _INT_BOTTOM, flags
        r = abs(x) % abs(y)
        return IntInterval.const(r if x >= 0 else -r), flags
    m = max(abs(b.lo), abs(b.hi)) - 1
    lo = 0 if a.lo >= 0 else max(a.lo, -m)
    hi = 0 if a.hi <= 0 else min(a.hi, m)
    return IntInterval(lo, hi), flags


def _float_arith(op: str, a: FloatInterval, b: Optional[FloatInterval], machine: Machine) -> Tuple[FloatInterval, Flags]:
    nan = a.maybe_nan or (b is not None and b.maybe_nan)
    if op == "neg":
        r = FloatInterval(-a.hi, -a.lo)
        return (_FLOAT_BOTTOM if r.is_bottom else r), (frozenset({AlarmKind.NAN}) if nan else NO_FLAGS)
    if op == "cast_float":
        return a, NO_FLAGS
    assert b is not None
    if a.is_empty_range or b.is_empty_range:
        return _FLOAT_BOTTOM, NO_FLAGS
    if op == "+":
        return _floats_clamped(fl.add_down(a.lo, b.lo), fl.add_up(a.hi, b.hi), nan, NO_FLAGS)
    if op == "-":
        return _floats_clamped(fl.sub_down(a.lo, b.hi), fl.sub_up(a.hi, b.lo), nan, NO_FLAGS)
    if op == "*":
        lo = min(fl.mul_down(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi))
        hi = max(fl.mul_up(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi))
        return _floats_clamped(lo, hi, nan, NO_FLAGS)
    if op == "/":
        flags = frozenset({AlarmKind.DIV_ZERO}) if b.contains(0.0) else NO_FLAGS
        result, out_flags = _FLOAT_BOTTOM, flags
        for part in _nonzero_parts(b):
            lo = min(fl.div_down(x, y) for x in (a.lo, a.hi) for y in (part.lo, part.hi))
            hi = max(fl.div_up(x, y) for x in (a.lo, a.hi) for y in (part.lo, part.hi))
            r, f = _floats_clamped(lo, hi, nan, NO_FLAGS)
            result = result.join(r)
            out_flags = out_flags | f
        return result, out_flags
    raise ValueError(f"unknown float operator {op}")


def arith(op: str, a: Interval, b: Optional[Interval] = None, machine: Machine = DEFAULT_MACHINE) -> Tuple[Interval, Flags]:
    """区間演算。エラーの可能性はフラグで返し、結果からは除外する。"""
    if a.is_bottom or (b is not None and b.is_bottom):
        return (FloatInterval.bottom() if not a.is_int else IntInterval.bottom()), NO_FLAGS
    if op == "cast_float":
        if a.is_int:
            return a.to_float(), NO_FLAGS
        return a, NO_FLAGS
    if op == "cast_int":
        if a.is_int:
            return a, NO_FLAGS
        flags = frozenset({AlarmKind.NAN}) if a.maybe_nan else NO_FLAGS
        lo = -INF if math.isinf(a.lo) else math.trunc(a.lo)
        hi = INF if math.isinf(a.hi) else math.trunc(a.hi)
        r, f = _ints_clamped(lo, hi, machine)
        return r, flags | f
    if a.is_int:
        assert b is None or b.is_int
        return _int_arith(op, a, b, machine)  # type: ignore[arg-type]
    assert b is None or not b.is_int
    return _float_arith(op, a, b, machine)  # type: ignore[arg-type]


# --- 比較によるガード ---------------------------------------------------------


def guard_cmp(op: str, a: Interval, b: Interval, negated: bool = False) -> Optional[Tuple[Interval, Interval]]:
    """比較 a op b（negated なら否定）を満たす組だけを残す。空なら None。"""
    if a.is_bottom or b.is_bottom:
        return None
    eff = negate_cmp(op) if negated else op
    # NaN は != だけを真にする
    keep_nan = (op == "!=") != negated
    nan_a = a.maybe_nan and keep_nan
    nan_b = b.maybe_nan and keep_nan
    if a.is_int:
        r = _guard_ints(eff, a, b)  # type: ignore[arg-type]
        if r is None:
            return None
        return r
    r = _guard_floats(eff, a, b)  # type: ignore[arg-type]
    if r is None:
        if nan_a or nan_b:
            return (FloatInterval(INF, -INF, nan_a), FloatInterval(INF, -INF, nan_b))
        return None
    ra, rb = r
    return (FloatInterval(ra.lo, ra.hi, nan_a), FloatInterval(rb.lo, rb.hi, nan_b))


def _guard_ints(op: str, a: IntInterval, b: IntInterval) -> Optional[Tuple[IntInterval, IntInterval]]:
    if op in (">", ">="):
        r = _guard_ints(swap_cmp(op), b, a)
        return None if r is None else (r[1], r[0])
    if op == "<":
        ra, rb = IntInterval(a.lo, min(a.hi, b.hi - 1)), IntInterval(max(b.lo, a.lo + 1), b.hi)
    elif op == "<=":
        ra, rb = IntInterval(a.lo, min(a.hi, b.hi)), IntInterval(max(b.lo, a.lo), b.hi)
    elif op == "==":
        ra = rb = a.meet(b)
    else:
        ra, rb = a, b
        if b.is_singleton:
            ra = _trim_int(a, b.lo)
        if a.is_singleton:
            rb = _trim_int(b, a.lo)
        if a.is_singleton and b.is_singleton and a.lo == b.lo:
            return None
    if ra.is_bottom or rb.is_bottom:
        return None
    return ra, rb


def _trim_int(a: IntInterval, v: Bound) -> IntInterval:
    lo, hi = a.lo, a.hi
    if lo == v:
        lo = lo + 1
    if hi == v:
        hi = hi - 1
    return IntInterval(lo, hi)


def _guard_floats(op: str, a: FloatInterval, b: FloatInterval) -> Optional[Tuple[FloatInterval, FloatInterval]]:
    if a.is_empty_range or b.is_empty_range:
        return None
    if op in (">", ">="):
        r = _guard_floats(swap_cmp(op), b, a)
        return None if r is None else (r[1], r[0])
    if op == "<":
        ra = FloatInterval(a.lo, min(a.hi, fl.next_down(b.hi)))
        rb = FloatInterval(max(b.lo, fl.next_up(a.lo)), b.hi)
    elif op == "<=":
        ra = FloatInterval(a.lo, min(a.hi, b.hi))
        rb = FloatInterval(max(b.lo, a.lo), b.hi)
    elif op == "==":
        m = FloatInterval(max(a.lo, b.lo), min(a.hi, b.hi))
        ra = rb = m
    else:
        ra, rb = a, b
        if b.is_singleton:
            ra = _trim_float(a, b.lo)
        if a.is_singleton:
            rb = _trim_float(b, a.lo)
        if a.is_singleton and b.is_singleton and a.lo == b.lo:
            return None
    if ra.is_empty_range or rb.is_empty_range:
        return None
    return ra, rb


def _trim_float(a: FloatInterval, v: float) -> FloatInterval:
    lo, hi = a.lo, a.hi
    if lo == v:
        lo = fl.next_up(lo)
    if hi == v:
        hi = fl.next_down(hi)
    return FloatInterval(lo, hi)


def compare(op: str, a: Interval, b: Interval) -> IntInterval:
    """比較結果を真理値区間 [0,1] の部分集合として返す。"""
    can_true = guard_cmp(op, a, b) is not None
    can_false = guard_cmp(op, a, b, negated=True) is not None
    if can_true and can_false:
        return IntInterval(0, 1)
    if can_true:
        return IntInterval(1, 1)
    if can_false:
        return IntInterval(0, 0)
    return IntInterval.bottom()
