"""
オクタゴン（±x ± y ≤ c）ドメイン。

代入は一時変数 t を加えた行列で行う：t の範囲（区間評価の結果）と、
線形形式で係数が ±1 の各変数 y について t ∓ y の範囲を書き込み、
閉包してから古い x を捨てて t を x の位置に移す。
"""
from __future__ import annotations

from typing import Any, List, Mapping, Optional, Sequence

import numpy as np
from loguru import logger

from ...frontend.ast import BOOL, CMP_OPS, INT, Binary
from ...memory.transfer import linear_form
from ...numeric import floats as fl
from ...numeric.intervals import negate_cmp
from ...numeric.linear import LinearForm, eval_form, split_unit
from . import dbm
from .dbm import Octagon


def _sign(s: int) -> str:
    return "+" if s > 0 else "-"


class OctagonDomain:
    name = "octagon"
    kind = "octagon"

    def packs(self, packing) -> List[Any]:
        return list(packing.octagon_packs)

    def init_store(self, ctx, pack, env) -> Octagon:
        m = np.array(Octagon.top(len(pack.cells)).m)
        for a, cell in enumerate(pack.cells):
            dbm.set_bounds(m, a, env.interval(cell).to_float())
        return dbm.close(m)

    # --- 代入・ガード ---

    def assign(self, ctx, before, after, store: Octagon, pack, cell, rhs, lf: Optional[LinearForm]) -> Octagon:
        o = store.close()
        if o.is_bottom:
            return o
        a = pack.cells.index(cell)
        t = len(pack.cells)
        m = dbm.extend(o)
        dbm.set_bounds(m, t, after.interval(cell).to_float())
        if lf is not None:
            units = []
            for b, y in enumerate(pack.cells):
                unit = split_unit(lf, y)
                if unit is None:
                    continue
                s, rest = int(unit[0]), unit[1]
                units.append((b, s, y))
                # t - s·y ∈ rest（最上位の丸め誤差を含む）
                d = eval_form(rest, before.interval)
                if d.is_empty_range:
                    continue
                dbm.constrain(m, 1, t, -s, b, d.hi)
                dbm.constrain(m, -1, t, s, b, -d.lo)
            # t = s1·y1 + s2·y2 + rest なら、y1 と y2 の関係から t の範囲を絞る
            for i, (b1, s1, y1) in enumerate(units):
                for b2, s2, y2 in units[i + 1 :]:
                    d = eval_form(lf.without(y1).without(y2), before.interval)
                    if d.is_empty_range:
                        continue
                    hi = fl.add_up(dbm.pair_bound(o.m, s1, b1, s2, b2), d.hi)
                    lo = fl.sub_down(d.lo, dbm.pair_bound(o.m, -s1, b1, -s2, b2))
                    dbm.constrain(m, 1, t, 1, t, hi)
                    dbm.constrain(m, -1, t, -1, t, -lo)
        closed = dbm.close(m)
        if closed.is_bottom:
            return closed
        return Octagon(dbm.replace_var(np.array(closed.m), a, t), closed=True)

    def guard(self, ctx, env, store: Octagon, pack, atom, polarity: bool) -> Optional[Octagon]:
        if not (isinstance(atom, Binary) and atom.op in CMP_OPS) or atom.left.ty == BOOL:
            return store
        op = atom.op if polarity else negate_cmp(atom.op)
        if op == "!=":
            return store
        left = linear_form(ctx, env, atom.left)
        right = linear_form(ctx, env, atom.right)
        if left is None or right is None:
            return store
        o = store.close()
        if o.is_bottom:
            return None
        d = left.sub(right)
        gap = -1.0 if atom.left.ty == INT else 0.0
        forms = []
        if op in ("<", "<=", "=="):
            forms.append((d, gap if op == "<" else 0.0))
        if op in (">", ">=", "=="):
            forms.append((d.neg(), gap if op == ">" else 0.0))
        m = np.array(o.m)
        for form, c in forms:
            units = []
            for b, y in enumerate(pack.cells):
                unit = split_unit(form, y)
                if unit is not None:
                    units.append((b, int(unit[0]), y))
            # 係数 ±1 の変数 1 つ・2 つの組ごとに、残りを区間にして制約を作る
            for i, (b1, s1, y1) in enumerate(units):
                for b2, s2, y2 in units[i:]:
                    rest = form.without(y1) if b1 == b2 else form.without(y1).without(y2)
                    r = eval_form(rest, env.interval)
                    if r.is_empty_range:
                        continue
                    dbm.constrain(m, s1, b1, s2, b2, fl.sub_up(c, r.lo))
        closed = dbm.close(m)
        return None if closed.is_bottom else closed

    # --- 束演算 ---

    def join(self, ctx, s1: Octagon, e1, s2: Octagon, e2) -> Octagon:
        return dbm.join(s1, s2)

    def widen(self, ctx, s1: Octagon, e1, s2: Octagon, e2) -> Octagon:
        return dbm.widen(s1, s2, ctx.thresholds)

    def narrow(self, ctx, s1: Octagon, e1, s2: Octagon, e2) -> Octagon:
        return dbm.narrow(s1, s2, ctx.thresholds)

    def leq(self, s1: Octagon, s2: Octagon) -> bool:
        return dbm.leq(s1, s2)

    def refine(self, ctx, env, store: Octagon, pack):
        if store.is_bottom:
            return None
        o = store
        if store.closed:
            # 拡大の結果（閉包していない行列）には区間を書き戻さない
            m = np.array(store.m)
            for a, cell in enumerate(pack.cells):
                dbm.set_bounds(m, a, env.interval(cell).to_float())
            if not np.array_equal(m, store.m):
                o = dbm.close(m)
                if o.is_bottom:
                    logger.debug("octagon {} is empty after reduction", pack.id)
                    return None
        return o, {cell: o.bounds(a) for a, cell in enumerate(pack.cells)}

    # --- 比較・表示 ---

    def contains(self, store: Octagon, pack, values: Mapping[Any, Sequence[Any]]) -> bool:
        if any(cell not in values for cell in pack.cells):
            return not store.is_bottom
        return dbm.contains(store, [values[cell][0] for cell in pack.cells])

    def dump(self, store: Octagon, pack) -> List[str]:
        if store.is_bottom:
            return ["bottom"]
        names = [str(c) for c in pack.cells]
        lines = []
        for i, j, c in store.constraints():
            sj = 1 if j % 2 == 0 else -1
            si = -1 if i % 2 == 0 else 1
            if i // 2 == j // 2:
                lines.append(f"{_sign(sj)}{names[j // 2]} <= {fl.div_up(c, 2.0)!r}")
            else:
                lines.append(f"{_sign(sj)}{names[j // 2]} {_sign(si)}{names[i // 2]} <= {c!r}")
        return lines


DOMAIN_CLASS = OctagonDomain
