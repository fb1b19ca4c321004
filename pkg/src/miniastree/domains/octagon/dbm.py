"""
オクタゴンの差分束縛行列（DBM）。

変数 a に 2a（+x）と 2a+1（-x）の 2 つの添字を割り当て、
m[i, j] は V_j - V_i ≤ m[i, j] を表す。加算はすべて上向きに丸めるので、
実数上の制約として健全。
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from ...numeric import floats as fl
from ...numeric.floats import INF
from ...numeric.intervals import FloatInterval, ThresholdSet


def pos(a: int, sign: int) -> int:
    """sign·x_a に対応する添字。"""
    return 2 * a if sign > 0 else 2 * a + 1


def bar(i: int) -> int:
    return i ^ 1


class Octagon:
    """不変な DBM。`m` が None なら空（bottom）。"""

    __slots__ = ("m", "closed")

    def __init__(self, m: Optional[np.ndarray], closed: bool = False) -> None:
        if m is not None:
            m.setflags(write=False)
        self.m = m
        self.closed = closed

    @classmethod
    def top(cls, k: int) -> "Octagon":
        m = np.full((2 * k, 2 * k), INF)
        np.fill_diagonal(m, 0.0)
        return cls(m, closed=True)

    @classmethod
    def bottom(cls) -> "Octagon":
        return _BOTTOM

    @property
    def is_bottom(self) -> bool:
        return self.m is None

    @property
    def size(self) -> int:
        return 0 if self.m is None else self.m.shape[0] // 2

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Octagon):
            return NotImplemented
        if self.m is None or other.m is None:
            return self.m is None and other.m is None
        return bool(np.array_equal(self.m, other.m))

    def __hash__(self) -> int:
        return hash(None if self.m is None else self.m.tobytes())

    def __repr__(self) -> str:
        if self.m is None:
            return "Octagon(bottom)"
        return f"Octagon({self.size} vars, closed={self.closed})"

    # --- 閉包 ---

    def close(self) -> "Octagon":
        if self.m is None or self.closed:
            return self
        return close(self.m)

    # --- 単項の束縛 ---

    def bounds(self, a: int) -> FloatInterval:
        """x_a の範囲（行列から読み取れる分）。"""
        m = self.m
        hi = fl.div_up(m[2 * a + 1, 2 * a], 2.0)
        lo = -fl.div_up(m[2 * a, 2 * a + 1], 2.0)
        return FloatInterval(lo, hi)

    def constraints(self) -> Iterator[Tuple[int, int, float]]:
        """有限な制約 (i, j, c)：V_j - V_i ≤ c（対称な重複は除く）。"""
        n = 0 if self.m is None else self.m.shape[0]
        for i in range(n):
            for j in range(n):
                c = self.m[i, j]
                if i == j or not np.isfinite(c):
                    continue
                # (i, j) と (bar j, bar i) は同じ制約
                if (bar(j), bar(i)) < (i, j):
                    continue
                yield i, j, float(c)


_BOTTOM = Octagon(None, closed=True)


def _halve_up(a: np.ndarray) -> np.ndarray:
    h = a / 2.0
    # 非正規化数の範囲では半分が正確でない
    return np.where(h * 2.0 < a, np.nextafter(h, np.inf), h)


def close(m: np.ndarray) -> Octagon:
    """最短路閉包（Floyd–Warshall + 強化）。負の閉路があれば bottom。"""
    m = np.array(m, dtype=float)
    n = m.shape[0]
    for k in range(n):
        m = np.minimum(m, fl.add_up_array(m[:, k : k + 1], m[k : k + 1, :]))
    idx = np.arange(n)
    # m[i, bar i] + m[bar j, j] は V_j - V_i の束縛の 2 倍
    unary = m[idx, idx ^ 1]
    m = np.minimum(m, _halve_up(fl.add_up_array(unary[:, None], unary[idx ^ 1][None, :])))
    if np.any(np.diag(m) < 0):
        return _BOTTOM
    np.fill_diagonal(m, 0.0)
    return Octagon(m, closed=True)


def constrain(m: np.ndarray, s1: int, a: int, s2: int, b: int, c: float) -> None:
    """s1·x_a + s2·x_b ≤ c を m に加える（a == b なら単項の s1·x_a ≤ c）。m は書き換える。"""
    if not c < INF:
        return
    if a == b:
        i, j = pos(a, -s1), pos(a, s1)
        m[i, j] = min(m[i, j], fl.mul_up(2.0, c))
        return
    i, j = pos(b, -s2), pos(a, s1)
    m[i, j] = min(m[i, j], c)
    m[bar(j), bar(i)] = min(m[bar(j), bar(i)], c)


def set_bounds(m: np.ndarray, a: int, itv: FloatInterval) -> None:
    if itv.is_empty_range:
        return
    constrain(m, 1, a, 1, a, itv.hi)
    constrain(m, -1, a, -1, a, -itv.lo)


def extend(o: Octagon) -> np.ndarray:
    """変数を 1 つ（最後に）追加した書き換え可能な行列。"""
    n = o.m.shape[0]
    m = np.full((n + 2, n + 2), INF)
    m[:n, :n] = o.m
    m[n, n] = m[n + 1, n + 1] = 0.0
    return m


def replace_var(m: np.ndarray, a: int, src: int) -> np.ndarray:
    """x_a を捨て、x_src を a の位置に移し、x_src の位置を除く。"""
    k = m.shape[0] // 2
    order = []
    for v in range(k):
        if v == src:
            continue
        w = src if v == a else v
        order.extend([2 * w, 2 * w + 1])
    return m[np.ix_(order, order)]


# --- 束演算 ---


def join(o1: Octagon, o2: Octagon) -> Octagon:
    if o1.is_bottom:
        return o2
    if o2.is_bottom or o1 is o2:
        return o1
    a, b = o1.close(), o2.close()
    if a.is_bottom:
        return b
    if b.is_bottom:
        return a
    return Octagon(np.maximum(a.m, b.m), closed=True)


def widen(o1: Octagon, o2: Octagon, thresholds: ThresholdSet) -> Octagon:
    """要素ごとのしきい値付き拡大。結果は閉包しない。"""
    if o1.is_bottom:
        return o2
    if o2.is_bottom or o1 is o2:
        return o1
    m = np.array(o1.m)
    grew = o2.m > o1.m
    for i, j in zip(*np.nonzero(grew)):
        m[i, j] = thresholds.above(float(o2.m[i, j]))
    return Octagon(m, closed=False)


def narrow(o1: Octagon, o2: Octagon, thresholds: ThresholdSet) -> Octagon:
    """無限大かしきい値だった要素だけを新しい値で置き換える。"""
    if o1.is_bottom or o2.is_bottom:
        return o2
    m = np.array(o1.m)
    for i, j in zip(*np.nonzero(o2.m < o1.m)):
        old = float(o1.m[i, j])
        if old == INF or old in thresholds:
            m[i, j] = o2.m[i, j]
    return Octagon(m, closed=False)


def leq(o1: Octagon, o2: Octagon) -> bool:
    if o1.is_bottom:
        return True
    if o2.is_bottom:
        return False
    c = o1.close()
    return c.is_bottom or bool(np.all(c.m <= o2.m))


def contains(o: Octagon, values: Sequence[float]) -> bool:
    """具体値の組 (x_0, …, x_{k-1}) が制約をすべて満たすか（有理数で厳密に判定）。"""
    if o.is_bottom:
        return False
    v = []
    for x in values:
        q = Fraction(x)
        v.extend([q, -q])
    for i, j, c in o.constraints():
        if v[j] - v[i] > Fraction(c):
            return False
    return True


def pair_bound(m: np.ndarray, s1: int, a: int, s2: int, b: int) -> float:
    """s1·x_a + s2·x_b の上界（a != b）。"""
    return float(m[pos(b, -s2), pos(a, s1)])
