"""
IEEE-754 倍精度の方向付き丸め。

FPU の丸めモードは変更せず、最近接丸めの結果を誤差なし変換（TwoSum、
fma、または有理数）で検査し、必要なときだけ 1ulp ずらす。
表現可能な結果はそのまま残るので、整数値の区間は広がらない。
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

INF = math.inf
DBL_MAX = sys.float_info.max
DENORM_MIN = math.ulp(0.0)

_fma = getattr(math, "fma", None)
# fma の誤差項が表現可能な範囲（アンダーフローしない）
_FMA_SAFE_LO = 2.0 ** -900


def next_up(x: float) -> float:
    return math.nextafter(x, INF)


def next_down(x: float) -> float:
    return math.nextafter(x, -INF)


def _sum_error(a: float, b: float, s: float) -> float:
    # TwoSum: a + b = s + err（オーバーフローしない限り厳密）
    bp = s - a
    ap = s - bp
    return (a - ap) + (b - bp)


def add_up(a: float, b: float) -> float:
    s = a + b
    if math.isinf(s):
        if s < 0 and math.isfinite(a) and math.isfinite(b):
            return -DBL_MAX
        return s
    if s != s:
        return s
    return next_up(s) if _sum_error(a, b, s) > 0 else s


def add_down(a: float, b: float) -> float:
    s = a + b
    if math.isinf(s):
        if s > 0 and math.isfinite(a) and math.isfinite(b):
            return DBL_MAX
        return s
    if s != s:
        return s
    return next_down(s) if _sum_error(a, b, s) < 0 else s


def sub_up(a: float, b: float) -> float:
    return add_up(a, -b)


def sub_down(a: float, b: float) -> float:
    return add_down(a, -b)


def _product_error_sign(a: float, b: float, p: float) -> int:
    if _fma is not None and abs(p) >= _FMA_SAFE_LO:
        err = _fma(a, b, -p)
        return (err > 0) - (err < 0)
    exact = Fraction(a) * Fraction(b) - Fraction(p)
    return (exact > 0) - (exact < 0)


def _mul_raw(a: float, b: float) -> float:
    # 0 * inf は 0 とみなす（区間端点の積）
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def mul_up(a: float, b: float) -> float:
    p = _mul_raw(a, b)
    if p == 0.0:
        if a == 0.0 or b == 0.0:
            return 0.0
        # アンダーフロー
        return DENORM_MIN if (a > 0) == (b > 0) else -0.0
    if math.isinf(p):
        if p < 0 and math.isfinite(a) and math.isfinite(b):
            return -DBL_MAX
        return p
    return next_up(p) if _product_error_sign(a, b, p) > 0 else p


def mul_down(a: float, b: float) -> float:
    p = _mul_raw(a, b)
    if p == 0.0:
        if a == 0.0 or b == 0.0:
            return 0.0
        return 0.0 if (a > 0) == (b > 0) else -DENORM_MIN
    if math.isinf(p):
        if p > 0 and math.isfinite(a) and math.isfinite(b):
            return DBL_MAX
        return p
    return next_down(p) if _product_error_sign(a, b, p) < 0 else p


def _quotient_error_sign(a: float, b: float, q: float) -> int:
    exact = Fraction(a) / Fraction(b) - Fraction(q)
    return (exact > 0) - (exact < 0)


def div_up(a: float, b: float) -> float:
    if math.isinf(b):
        return 0.0 if math.isfinite(a) else INF
    q = a / b
    if math.isinf(q):
        if q < 0 and math.isfinite(a):
            return -DBL_MAX
        return q
    if math.isinf(a):
        return q
    if q == 0.0 and a != 0.0:
        return DENORM_MIN if (a > 0) == (b > 0) else -0.0
    return next_up(q) if _quotient_error_sign(a, b, q) > 0 else q


def div_down(a: float, b: float) -> float:
    if math.isinf(b):
        return 0.0 if math.isfinite(a) else -INF
    q = a / b
    if math.isinf(q):
        if q > 0 and math.isfinite(a):
            return DBL_MAX
        return q
    if math.isinf(a):
        return q
    if q == 0.0 and a != 0.0:
        return 0.0 if (a > 0) == (b > 0) else -DENORM_MIN
    return next_down(q) if _quotient_error_sign(a, b, q) < 0 else q


def sqrt_up(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return INF
    s = math.sqrt(x)
    return next_up(s) if Fraction(s) ** 2 < Fraction(x) else s


def sqrt_down(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return INF
    s = math.sqrt(x)
    return next_down(s) if Fraction(s) ** 2 > Fraction(x) else s


def add_up_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """要素ごとの上向き丸め加算（DBM 用）。+inf はそのまま伝播する。"""
    with np.errstate(invalid="ignore", over="ignore"):
        s = a + b
        bp = s - a
        ap = s - bp
        err = (a - ap) + (b - bp)
    bump = np.isfinite(s) & (err > 0)
    return np.where(bump, np.nextafter(s, np.inf), s)


@dataclass(frozen=True)
class FloatModel:
    # f: 実数に対する浮動小数点数の最大相対誤差（最近接丸めなら 2^-53）
    f: float = 2.0 ** -53
    denorm_min: float = DENORM_MIN
    overflow: float = DBL_MAX

    def __post_init__(self) -> None:
        if not self.f > 0:
            raise ValueError("FloatModel.f must be positive")

    @classmethod
    def conservative(cls) -> "FloatModel":
        return cls(f=2.0 ** -52)

    def rounding_error(self, magnitude: float) -> float:
        """大きさ magnitude の結果に対する 1 演算分の絶対誤差の上界。"""
        if math.isinf(magnitude):
            return INF
        # 区間は浮動小数点結果を囲むので、実数値は |v|/(1-f) 以下。その分を 1ulp で吸収する
        return next_up(add_up(mul_up(self.f, magnitude), self.denorm_min))
