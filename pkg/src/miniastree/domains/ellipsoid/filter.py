"""
2 次のディジタルフィルタ X' = aX - bY + t の係数と、楕円の束縛の計算。

楕円 X² - aXY + bY² ≤ k は 0 < b < 1、a² - 4b < 0 のとき
k ≥ (t_M / (1 - √b))² なら 1 ステップで保たれる。丸め誤差を含めた
1 ステップ後の束縛は δ(k) で与えられる。計算はすべて上向きに丸める。
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from ...errors import InvalidFilterParams
from ...frontend.ast import FLOAT, Binary, Const, Expr, Unary, VarRef, referenced_vars
from ...numeric import floats as fl
from ...numeric.floats import INF
from ...numeric.intervals import FloatInterval
from ...numeric.linear import iadd, imul, ineg

MINUS = "minus"  # a*X - b*Y + t
PLUS = "plus"  # a*X + c*Y + t（c = -b）


@dataclass(frozen=True)
class FilterParams:
    a: float
    b: float

    def __post_init__(self) -> None:
        if not 0.0 < self.b < 1.0:
            raise InvalidFilterParams(f"filter coefficient b={self.b!r} is not in (0, 1)")
        if not self.a * self.a - 4.0 * self.b < 0.0:
            raise InvalidFilterParams(f"filter coefficients a={self.a!r}, b={self.b!r} do not satisfy a^2 - 4b < 0")

    @property
    def disc_down(self) -> float:
        """4b - a² の下界。"""
        return fl.sub_down(fl.mul_down(4.0, self.b), fl.mul_up(self.a, self.a))

    def contraction(self, f: float) -> float:
        """√b + 4f(|a|√b + b)/√(4b - a²) の上界（1 ステップで √k に掛かる係数）。"""
        sb = fl.sqrt_up(self.b)
        if f == 0.0:
            return sb
        err = fl.div_up(
            fl.mul_up(fl.mul_up(4.0, f), fl.add_up(fl.mul_up(abs(self.a), sb), self.b)),
            fl.sqrt_down(self.disc_down),
        )
        return fl.add_up(sb, err)

    def prop1_threshold(self, t_max: float, f: float = 0.0) -> float:
        """
        ((1 + f)·t_M / (1 - contraction(f)))²：これ以上の k では δ(k) ≤ k。

        f = 0 なら丸め誤差のない場合の (t_M / (1 - √b))²。係数が 1 以上になる
        （丸め誤差が大きすぎる）ときは INF。
        """
        if t_max == 0.0:
            return 0.0
        gap = fl.sub_down(1.0, self.contraction(f))
        if gap <= 0.0:
            return INF
        q = fl.div_up(fl.mul_up(fl.add_up(1.0, f), t_max), gap)
        return fl.mul_up(q, q)

    def delta(self, k: float, t_max: float, f: float) -> float:
        """
        1 ステップ後の束縛
        ((√b + 4f(|a|√b + b)/√(4b - a²))·√k + (1 + f)·t_M)²。
        """
        if k == INF or t_max == INF:
            return INF
        s = fl.add_up(fl.mul_up(self.contraction(f), fl.sqrt_up(k)), fl.mul_up(fl.add_up(1.0, f), t_max))
        return fl.mul_up(s, s)

    def interval_bound(self, k: float) -> Tuple[float, float]:
        """X² - aXY + bY² ≤ k から (|X| の上界, |Y| の上界)。"""
        if k == INF:
            return INF, INF
        disc = self.disc_down
        bx = fl.mul_up(2.0, fl.sqrt_up(fl.div_up(fl.mul_up(self.b, k), disc)))
        by = fl.mul_up(2.0, fl.sqrt_up(fl.div_up(k, disc)))
        return bx, by

    def quadratic(self, x: FloatInterval, y: FloatInterval) -> float:
        """区間上での X² - aXY + bY² の上界。"""
        if x.is_empty_range or y.is_empty_range:
            return 0.0
        q = iadd(iadd(_square(x), ineg(imul(FloatInterval.const(self.a), imul(x, y)))), imul(FloatInterval.const(self.b), _square(y)))
        return q.hi if q.hi == q.hi else INF

    def quadratic_equal(self, x: FloatInterval) -> float:
        """X = Y のときの (1 - a + b)X² の上界。"""
        if x.is_empty_range:
            return 0.0
        c = fl.add_up(fl.sub_up(1.0, self.a), self.b)
        return imul(FloatInterval.const(c), _square(x)).hi


def _square(x: FloatInterval) -> FloatInterval:
    m = max(abs(x.lo), abs(x.hi))
    lo = 0.0 if x.lo <= 0.0 <= x.hi else fl.mul_down(min(abs(x.lo), abs(x.hi)), min(abs(x.lo), abs(x.hi)))
    return FloatInterval(lo, fl.mul_up(m, m))


@dataclass(frozen=True)
class FilterMatch:
    a: float
    b: float
    x: VarRef
    y: VarRef
    # t の項（符号, 式）
    rest: Tuple[Tuple[int, Expr], ...]
    convention: str


def _terms(e: Expr, sign: int, out: List[Tuple[int, Expr]]) -> None:
    if isinstance(e, Binary) and e.op in ("+", "-"):
        _terms(e.left, sign, out)
        _terms(e.right, sign if e.op == "+" else -sign, out)
    elif isinstance(e, Unary) and e.op == "-":
        _terms(e.operand, -sign, out)
    else:
        out.append((sign, e))


def _product(e: Expr) -> Optional[Tuple[float, VarRef]]:
    if not (isinstance(e, Binary) and e.op == "*"):
        return None
    for c, v in ((e.left, e.right), (e.right, e.left)):
        if isinstance(c, Const) and c.ty == FLOAT and isinstance(v, VarRef) and v.ty == FLOAT:
            return float(c.value), v
    return None


def match_filter_rhs(e: Expr) -> Optional[FilterMatch]:
    """
    `a*X - b*Y + t` の形の式を認識する。`a*X + c*Y + t`（c < 0）も同じ形として b = -c とする。
    t は X、Y を含まない式の和。
    """
    if e.ty != FLOAT:
        return None
    terms: List[Tuple[int, Expr]] = []
    _terms(e, 1, terms)
    products = []
    rest = []
    for sign, t in terms:
        p = _product(t)
        if p is not None and len(products) < 2:
            products.append((sign, p[0], p[1]))
        else:
            rest.append((sign, t))
    if len(products) != 2:
        return None
    (sx, a, x), (sy, c, y) = products
    if x.var == y.var:
        return None
    for _, t in rest:
        if {x.var, y.var} & set(referenced_vars(t)):
            return None
    return FilterMatch(sx * a, -sy * c, x, y, tuple(rest), MINUS if sy < 0 else PLUS)
