"""
楕円ドメイン：フィルタのパックごとに、変数の順序対 (X, Y) → k
（X² - aXY + bY² ≤ k）の表を持つ。表にない対は +∞。

代入は 3 通り：
- フィルタの式 `T := aX - bY + t` なら r(T, X) = δ(r(X, Y))
- コピー `T := S` なら S を含む制約を T に書き換えて加える
- それ以外は T を含む制約を消す
ガードは無視する。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import pyrsistent
from loguru import logger

from ...frontend.ast import VarRef
from ...memory.cells import CellId
from ...memory.transfer import Evaluator
from ...numeric import floats as fl
from ...numeric.floats import INF
from ...numeric.intervals import FloatInterval
from .filter import FilterParams, match_filter_rhs

Pair = Tuple[CellId, CellId]


@dataclass(frozen=True)
class EllipsoidStore:
    params: FilterParams
    r: pyrsistent.PMap = field(default_factory=pyrsistent.pmap)
    # 値が等しいことがわかっている順序対
    eq: pyrsistent.PSet = field(default_factory=pyrsistent.pset)

    def get(self, pair: Pair) -> float:
        return self.r.get(pair, INF)

    def erase(self, cell: CellId) -> "EllipsoidStore":
        r = pyrsistent.pmap({p: k for p, k in self.r.items() if cell not in p})
        eq = pyrsistent.pset(p for p in self.eq if cell not in p)
        return EllipsoidStore(self.params, r, eq)


def _reduced(store: EllipsoidStore, env, pair: Pair) -> float:
    """r(X, Y) と、区間から求めた X² - aXY + bY² の上界の小さい方。"""
    x, y = pair
    params = store.params
    bound = params.quadratic(env.interval(x).to_float(), env.interval(y).to_float())
    if pair in store.eq:
        bound = min(bound, params.quadratic_equal(env.interval(x).to_float()))
    return min(store.get(pair), bound)


class EllipsoidDomain:
    name = "ellipsoid"
    kind = "ellipsoid"

    def packs(self, packing) -> List[Any]:
        return list(packing.filter_packs)

    def init_store(self, ctx, pack, env) -> EllipsoidStore:
        return EllipsoidStore(pack.params)

    # --- 代入 ---

    def _t_max(self, ctx, env, rest) -> float:
        ev = Evaluator(ctx.interval_only(), env)
        total = 0.0
        for _, t in rest:
            itv = ev.eval(t).to_float()
            if itv.is_empty_range:
                continue
            total = fl.add_up(total, itv.magnitude)
        return total

    def _cell_of(self, ctx, ref: VarRef) -> Optional[CellId]:
        if ref.var is None or not ctx.layout.has_var(ref.var):
            return None
        return ctx.layout.scalar_cell(ref.var)

    def assign(self, ctx, before, after, store: EllipsoidStore, pack, cell, rhs, lf) -> EllipsoidStore:
        params = store.params
        m = match_filter_rhs(rhs)
        if m is not None and m.a == params.a and m.b == params.b:
            x, y = self._cell_of(ctx, m.x), self._cell_of(ctx, m.y)
            if x in pack.cells and y in pack.cells and cell not in (x, y):
                k = _reduced(store, before, (x, y))
                t_max = self._t_max(ctx, before, m.rest)
                d = params.delta(k, t_max, ctx.machine.float_model.f)
                new = store.erase(cell)
                if d < INF:
                    new = EllipsoidStore(params, new.r.set((cell, x), d), new.eq)
                logger.trace("filter step {} ({} form): k {} -> {}", cell, m.convention, k, d)
                return new
        if isinstance(rhs, VarRef):
            src = self._cell_of(ctx, rhs)
            if src == cell:
                return store
            if src in pack.cells:
                return self._copy(store, cell, src)
        return store.erase(cell)

    def _copy(self, store: EllipsoidStore, target: CellId, src: CellId) -> EllipsoidStore:
        added: Dict[Pair, float] = {}
        for (u, v), k in store.r.items():
            if u == src and v != target:
                added[(target, v)] = k
            elif v == src and u != target:
                added[(u, target)] = k
        new = store.erase(target)
        eq = new.eq.add((target, src)).add((src, target))
        return EllipsoidStore(store.params, new.r.update(added), eq)

    def guard(self, ctx, env, store, pack, atom, polarity: bool) -> EllipsoidStore:
        return store

    # --- 束演算 ---

    def join(self, ctx, s1: EllipsoidStore, e1, s2: EllipsoidStore, e2) -> EllipsoidStore:
        if s1 is s2:
            return s1
        r = {}
        for pair in set(s1.r) | set(s2.r):
            k1, k2 = s1.get(pair), s2.get(pair)
            # 片方だけ +∞ の対は、その側の区間から縮約してから比べる
            if k1 == INF:
                k1 = _reduced(s1, e1, pair)
            elif k2 == INF:
                k2 = _reduced(s2, e2, pair)
            if max(k1, k2) < INF:
                r[pair] = max(k1, k2)
        return EllipsoidStore(s1.params, pyrsistent.pmap(r), s1.eq & s2.eq)

    def widen(self, ctx, s1: EllipsoidStore, e1, s2: EllipsoidStore, e2) -> EllipsoidStore:
        if s1 is s2:
            return s1
        r = {}
        for pair, k1 in s1.r.items():
            k2 = s2.get(pair)
            if k2 == INF:
                k2 = _reduced(s2, e2, pair)
            k = k1 if k2 <= k1 else ctx.thresholds.above(k2)
            if k < INF:
                r[pair] = k
        return EllipsoidStore(s1.params, pyrsistent.pmap(r), s1.eq & s2.eq)

    def narrow(self, ctx, s1: EllipsoidStore, e1, s2: EllipsoidStore, e2) -> EllipsoidStore:
        r = {pair: min(s1.get(pair), s2.get(pair)) for pair in set(s1.r) | set(s2.r)}
        return EllipsoidStore(s1.params, pyrsistent.pmap(r), s1.eq & s2.eq)

    def leq(self, s1: EllipsoidStore, s2: EllipsoidStore) -> bool:
        if s1 is s2:
            return True
        return all(s1.get(pair) <= k for pair, k in s2.r.items()) and s2.eq <= s1.eq

    def refine(self, ctx, env, store: EllipsoidStore, pack):
        bounds: Dict[CellId, FloatInterval] = {}
        for (x, y), k in store.r.items():
            bx, by = store.params.interval_bound(k)
            for cell, b in ((x, bx), (y, by)):
                itv = FloatInterval(-b, b)
                bounds[cell] = bounds[cell].meet(itv) if cell in bounds else itv
        return store, bounds

    # --- 比較・表示 ---

    def contains(self, store: EllipsoidStore, pack, values: Mapping[CellId, Sequence[Any]]) -> bool:
        a, b = Fraction(store.params.a), Fraction(store.params.b)
        for (x, y), k in store.r.items():
            if x not in values or y not in values:
                continue
            vx, vy = Fraction(values[x][0]), Fraction(values[y][0])
            if vx * vx - a * vx * vy + b * vy * vy > Fraction(k):
                return False
        for x, y in store.eq:
            if x in values and y in values and values[x][0] != values[y][0]:
                return False
        return True

    def dump(self, store: EllipsoidStore, pack) -> List[str]:
        a, b = store.params.a, store.params.b
        return [f"{x}^2 - {a!r}*{x}*{y} + {b!r}*{y}^2 <= {k!r}" for (x, y), k in sorted(store.r.items())]


DOMAIN_CLASS = EllipsoidDomain
