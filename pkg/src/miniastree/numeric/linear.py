"""
区間係数の線形形式 Σ [a_i, b_i]·v_i + [a, b] への線形化。

浮動小数点の加減算ごとに、結果の大きさから見積もった絶対誤差
±(f·|結果| + 最小の非正規化数) を定数項に加える。乗除算の誤差は係数と定数項を
[1 - f, 1 + f] 倍して表す（X - 0.2 * X が [0.8⁻, 0.8⁺]·X になる）。
式の最上位の演算の誤差だけは `last_err` に分けて持つ（結果の端点は
浮動小数点数なので、1 変数の範囲を求めるときは省いてよい）。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Tuple

import pyrsistent

from ..frontend.ast import BOOL, FLOAT, Binary, Cast, Const, Expr, Field, Index, Unary, VarRef
from . import floats as fl
from .floats import INF, FloatModel
from .intervals import FloatInterval, Interval

CellKey = object
IntervalOf = Callable[[Expr], Interval]
# 変数参照 → 線形形式の変数（セル）。揮発性入力など変数として扱えないものは None
CellOf = Callable[[Expr], Optional[CellKey]]


# --- 外向き丸めの区間演算（飽和させない） ---


def iadd(a: FloatInterval, b: FloatInterval) -> FloatInterval:
    return FloatInterval(fl.add_down(a.lo, b.lo), fl.add_up(a.hi, b.hi))


def ineg(a: FloatInterval) -> FloatInterval:
    return FloatInterval(-a.hi, -a.lo)


def imul(a: FloatInterval, b: FloatInterval) -> FloatInterval:
    lo = min(fl.mul_down(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi))
    hi = max(fl.mul_up(x, y) for x in (a.lo, a.hi) for y in (b.lo, b.hi))
    return FloatInterval(lo, hi)


def _inverse(b: FloatInterval) -> FloatInterval:
    # 0 を含まない区間の逆数
    return FloatInterval(fl.div_down(1.0, b.hi), fl.div_up(1.0, b.lo))


def _err(e: float) -> FloatInterval:
    return FloatInterval(-e, e)


_ZERO = FloatInterval(0.0, 0.0)
_ONE = FloatInterval(1.0, 1.0)


@dataclass(frozen=True)
class LinearForm:
    coeffs: pyrsistent.PMap = field(default_factory=pyrsistent.pmap)
    const: FloatInterval = _ZERO
    # 最上位の演算の丸め誤差（絶対値の上界）
    last_err: float = 0.0

    @classmethod
    def constant(cls, itv: FloatInterval) -> "LinearForm":
        return cls(pyrsistent.pmap(), itv)

    @classmethod
    def variable(cls, cell: CellKey) -> "LinearForm":
        return cls(pyrsistent.pmap({cell: _ONE}), _ZERO)

    @property
    def is_constant(self) -> bool:
        return len(self.coeffs) == 0

    def cells(self) -> Iterator[CellKey]:
        return iter(sorted(self.coeffs))

    def coeff(self, cell: CellKey) -> FloatInterval:
        return self.coeffs.get(cell, _ZERO)

    def settled(self) -> "LinearForm":
        """last_err を定数項に繰り入れた形式（部分式として使うとき）。"""
        if self.last_err == 0.0:
            return self
        return LinearForm(self.coeffs, iadd(self.const, _err(self.last_err)))

    def add(self, other: "LinearForm") -> "LinearForm":
        a, b = self.settled(), other.settled()
        coeffs = a.coeffs
        for cell, c in b.coeffs.items():
            coeffs = coeffs.set(cell, iadd(coeffs[cell], c) if cell in coeffs else c)
        return LinearForm(coeffs, iadd(a.const, b.const))

    def neg(self) -> "LinearForm":
        a = self.settled()
        return LinearForm(pyrsistent.pmap({k: ineg(v) for k, v in a.coeffs.items()}), ineg(a.const))

    def sub(self, other: "LinearForm") -> "LinearForm":
        return self.add(other.neg())

    def scale(self, k: FloatInterval) -> "LinearForm":
        a = self.settled()
        return LinearForm(pyrsistent.pmap({c: imul(v, k) for c, v in a.coeffs.items()}), imul(a.const, k))

    def without(self, cell: CellKey) -> "LinearForm":
        """cell の項を取り除いた残り（last_err は保つ）。"""
        return LinearForm(self.coeffs.discard(cell), self.const, self.last_err)

    def with_error(self, err: float) -> "LinearForm":
        return LinearForm(self.coeffs, self.const, err)

    def __str__(self) -> str:
        terms = [f"{v}*{k}" for k, v in sorted(self.coeffs.items())]
        terms.append(str(self.const))
        s = " + ".join(terms)
        return f"{s} +- {self.last_err!r}" if self.last_err else s


def eval_form(lf: LinearForm, interval_of_cell: Callable[[CellKey], Interval], include_last: bool = True) -> FloatInterval:
    """各変数の区間を代入して外向きに評価する。"""
    acc = lf.const
    for cell, c in lf.coeffs.items():
        itv = interval_of_cell(cell)
        if itv.is_bottom:
            return FloatInterval.bottom()
        acc = iadd(acc, imul(c, itv.to_float()))
    if include_last and lf.last_err:
        acc = iadd(acc, _err(lf.last_err))
    if acc.lo != acc.lo or acc.hi != acc.hi:
        return FloatInterval(-INF, INF)
    return acc


class _Linearizer:
    def __init__(self, interval_of: IntervalOf, cell_of: CellOf, fm: FloatModel) -> None:
        self.interval_of = interval_of
        self.cell_of = cell_of
        self.fm = fm

    def intervalize(self, e: Expr) -> LinearForm:
        itv = self.interval_of(e)
        return LinearForm.constant(itv.to_float())

    def rounding(self, e: Expr, lf: LinearForm) -> LinearForm:
        if e.ty != FLOAT:
            return lf
        return lf.settled().with_error(self.fm.rounding_error(self.interval_of(e).magnitude))

    def scaled_rounding(self, e: Expr, lf: LinearForm) -> LinearForm:
        # round(p) = p·(1 + δ) + η,  |δ| ≤ f,  |η| ≤ 最小の非正規化数
        if e.ty != FLOAT:
            return lf
        r = lf.settled().scale(FloatInterval(fl.sub_down(1.0, self.fm.f), fl.add_up(1.0, self.fm.f)))
        return LinearForm(r.coeffs, iadd(r.const, _err(self.fm.denorm_min)))

    def form(self, e: Expr) -> Optional[LinearForm]:
        if e.ty == BOOL:
            return None
        if isinstance(e, Const):
            return LinearForm.constant(FloatInterval.const(float(e.value)))
        if isinstance(e, (VarRef, Field)):
            cell = self.cell_of(e)
            return LinearForm.variable(cell) if cell is not None else self.intervalize(e)
        if isinstance(e, Index):
            return self.intervalize(e)
        if isinstance(e, Unary):
            a = self.form(e.operand)
            return None if a is None else a.neg()
        if isinstance(e, Cast):
            if e.to == FLOAT:
                # 32bit 整数は倍精度で正確に表せる
                return self.form(e.operand)
            return self.intervalize(e)
        if isinstance(e, Binary):
            return self.binary(e)
        return None

    def binary(self, e: Binary) -> Optional[LinearForm]:
        if e.op in ("+", "-"):
            a, b = self.form(e.left), self.form(e.right)
            if a is None or b is None:
                return None
            return self.rounding(e, a.add(b) if e.op == "+" else a.sub(b))
        if e.op == "*":
            a, b = self.form(e.left), self.form(e.right)
            if a is None or b is None:
                return None
            if b.is_constant:
                r = a.scale(b.settled().const)
            elif a.is_constant:
                r = b.scale(a.settled().const)
            else:
                r = b.scale(self.interval_of(e.left).to_float())
            return self.scaled_rounding(e, r)
        if e.op == "/" and e.ty == FLOAT:
            a = self.form(e.left)
            if a is None:
                return None
            d = self.interval_of(e.right).to_float()
            if d.is_empty_range or d.contains(0.0):
                return None
            return self.scaled_rounding(e, a.scale(_inverse(d)))
        if e.op in ("/", "%", "<<", ">>"):
            return self.intervalize(e)
        return None


def linearize(e: Expr, interval_of: IntervalOf, cell_of: CellOf, fm: Optional[FloatModel] = None) -> Optional[LinearForm]:
    """
    数値式 e の線形形式。線形化できなければ None（区間評価の結果を使う）。

    interval_of は各部分式の区間評価の結果、cell_of は変数参照を
    線形形式の変数（セル）に対応させる。
    """
    return _Linearizer(interval_of, cell_of, fm or FloatModel()).form(e)


def split_unit(lf: LinearForm, cell: CellKey) -> Optional[Tuple[float, LinearForm]]:
    """cell の係数がちょうど ±1 なら (符号, 残りの形式)。"""
    c = lf.coeffs.get(cell)
    if c is None or c.lo != c.hi or abs(c.lo) != 1.0:
        return None
    return c.lo, lf.without(cell)
