"""
抽象環境上の転送関数：式の評価、代入、条件によるガード。

式は下から区間で評価し、演算子ごとのエラーの可能性を検査モードなら警告として記録する。
結果はエラーにならない継続だけを表す（`1/x` の後は x ≠ 0、`a[i]` の後は 0 ≤ i < len(a)）。
代入とガードは線形形式で区間を絞り、対象セルを含むパックの関係ドメインに通知したあと、
関係ドメインから区間への縮約を行う。
"""
from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

from ..alarms import AlarmKind
from ..context import AnalysisContext, Binding
from ..frontend.ast import (
    BOOL,
    CMP_OPS,
    FLOAT,
    INT,
    ArrayType,
    Binary,
    Cast,
    Const,
    Expr,
    Field,
    Index,
    Lvalue,
    ScalarType,
    Unary,
    VarDecl,
    VarRef,
    walk_expr,
)
from ..frontend.printer import expr_str
from ..numeric import floats as fl
from ..numeric.clocked import ClockedValue, lift_assign
from ..numeric.floats import INF
from ..numeric.intervals import (
    FloatInterval,
    Flags,
    Interval,
    IntInterval,
    arith,
    compare,
    guard_cmp,
    negate_cmp,
)
from ..numeric.linear import LinearForm, eval_form, linearize
from .cells import CellId
from .env import AbstractEnv, CellValue, as_cell_interval, normalize


def const_interval(e: Const) -> Interval:
    if e.ty == FLOAT:
        return FloatInterval.const(float(e.value))
    return IntInterval.const(int(e.value))


class Evaluator:
    """1 つの環境での式の区間評価。部分式ごとの結果を覚えておき、線形化で使う。"""

    def __init__(self, ctx: AnalysisContext, env: AbstractEnv) -> None:
        self.ctx = ctx
        self.env = env
        self.layout = ctx.layout
        # いずれかの演算でエラーの可能性があった
        self.faulty = False
        # エラーでない継続で成り立つ絞り込み（セル, 区間）
        self.refinements: List[Tuple[CellId, Interval]] = []
        self._cache: Dict[int, Interval] = {}

    # --- セル ---

    def strong_cell(self, e: Expr) -> Optional[CellId]:
        """e が強い更新・絞り込みのできる左辺値ならそのセル。"""
        if isinstance(e, VarRef):
            vl = self.layout.var(e.var)
            if not isinstance(vl.decl.ty, ScalarType) or vl.decl.is_volatile:
                return None
            return vl.cells[0]
        if isinstance(e, Field):
            return self.layout.field_cell(e.base.var, e.name)
        if isinstance(e, Index):
            vl = self.layout.var(e.base.var)
            itv = self.interval_of(e.index)
            if vl.shrunk or itv.is_bottom or not itv.is_singleton or not 0 <= itv.lo < vl.length:
                return None
            return vl.cells[int(itv.lo)]
        return None

    def form_cell(self, e: Expr) -> Optional[CellId]:
        # 線形形式の変数にできるのはスカラー変数とフィールドだけ
        if isinstance(e, (VarRef, Field)):
            return self.strong_cell(e)
        return None

    # --- 評価 ---

    def interval_of(self, e: Expr) -> Interval:
        itv = self._cache.get(id(e))
        if itv is None:
            itv = self.eval(e)
        return itv

    def _flag(self, e: Expr, flags: Flags, witness: Interval) -> None:
        if not flags:
            return
        self.faulty = True
        if self.ctx.alarms is not None:
            text = expr_str(e)
            for kind in sorted(flags, key=lambda k: k.value):
                self.ctx.alarms.record(e.point, kind, text, witness)

    def _refine(self, e: Expr, itv: Interval) -> None:
        cell = self.form_cell(e)
        if cell is not None:
            self.refinements.append((cell, itv))

    def eval(self, e: Expr) -> Interval:
        if self.env.is_bottom:
            r: Interval = FloatInterval.bottom() if e.ty == FLOAT else IntInterval.bottom()
        else:
            r = self._eval(e)
        self._cache[id(e)] = r
        return r

    def _eval(self, e: Expr) -> Interval:
        if isinstance(e, Const):
            return const_interval(e)
        if isinstance(e, VarRef):
            return self.env.interval(self.layout.scalar_cell(e.var))
        if isinstance(e, Field):
            return self.env.interval(self.layout.field_cell(e.base.var, e.name))
        if isinstance(e, Index):
            return self._index(e)
        if isinstance(e, Unary):
            a = self.eval(e.operand)
            if e.op == "!":
                return a if a.is_bottom else IntInterval(1 - a.hi, 1 - a.lo)
            r, flags = arith("neg", a, None, self.ctx.machine)
            self._flag(e, flags, a)
            return r
        if isinstance(e, Cast):
            a = self.eval(e.operand)
            r, flags = arith("cast_float" if e.to == FLOAT else "cast_int", a, None, self.ctx.machine)
            self._flag(e, flags, a)
            return r
        if isinstance(e, Binary):
            return self._binary(e)
        raise TypeError(f"cannot evaluate {e!r}")

    def index_range(self, e: Index) -> IntInterval:
        """添字の範囲（配列の範囲内に制限済み）。範囲外の可能性は警告する。"""
        length = self.layout.var(e.base.var).length
        idx = self.eval(e.index)
        if idx.is_bottom:
            return IntInterval.bottom()
        inside = idx.meet(IntInterval(0, length - 1))
        if not idx.leq(inside):
            self._flag(e, frozenset({AlarmKind.ARRAY_BOUNDS}), idx)
            self._refine(e.index, inside)
        return inside

    def _index(self, e: Index) -> Interval:
        inside = self.index_range(e)
        kind = self.layout.var(e.base.var).decl.ty.elem.kind
        acc: Interval = FloatInterval.bottom() if kind == FLOAT else IntInterval.bottom()
        if inside.is_bottom:
            return acc
        for cell in self.layout.element_cells(e.base.var, int(inside.lo), int(inside.hi)):
            acc = acc.join(self.env.interval(cell))
        return acc

    def _binary(self, e: Binary) -> Interval:
        if e.op in ("&&", "||"):
            return self._logical(e)
        a = self.eval(e.left)
        b = self.eval(e.right)
        if e.op in CMP_OPS:
            return compare(e.op, a, b)
        r, flags = arith(e.op, a, b, self.ctx.machine)
        if flags:
            self._flag(e, flags, b if e.op in ("/", "%", "<<", ">>") else r)
            if AlarmKind.DIV_ZERO in flags:
                nz = guard_cmp("!=", b, b.__class__.const(0) if b.is_int else FloatInterval.const(0.0))
                self._refine(e.right, nz[0] if nz is not None else b.__class__.bottom())
            if AlarmKind.SHIFT in flags:
                self._refine(e.right, IntInterval(0, self.ctx.machine.int_bits - 1))
        return r

    def _logical(self, e: Binary) -> Interval:
        a = self.eval(e.left)
        short = 0 if e.op == "&&" else 1
        if a.is_bottom or (a.lo == short and a.hi == short):
            return a
        # 右辺は左辺で決まらない場合だけ評価される
        sub_env = guard(self.ctx, self.env, e.left, e.op == "&&")
        sub = Evaluator(self.ctx, sub_env)
        b = sub.eval(e.right)
        self._cache.update(sub._cache)
        self.faulty = self.faulty or sub.faulty
        can_short = a.lo <= short <= a.hi
        outcomes = set(range(int(b.lo), int(b.hi) + 1)) if not b.is_bottom else set()
        if can_short:
            outcomes.add(short)
        if not outcomes:
            return IntInterval.bottom()
        return IntInterval(min(outcomes), max(outcomes))

    def refined_env(self) -> AbstractEnv:
        env = self.env
        for cell, itv in self.refinements:
            env = env.meet_interval(self.ctx, cell, itv)
            if env.is_bottom:
                break
        return env


def linear_form(ctx: AnalysisContext, env: AbstractEnv, e: Expr) -> Optional[LinearForm]:
    """e の線形形式（エラーの可能性がある式や真理値式では None）。"""
    if env.is_bottom or e.ty == BOOL:
        return None
    ev = Evaluator(ctx.interval_only(), env)
    ev.eval(e)
    if ev.faulty:
        return None
    return linearize(e, ev.interval_of, ev.form_cell, ctx.machine.float_model)


# --- 代入 -----------------------------------------------------------------------


def _target_cells(ev: Evaluator, target: Lvalue) -> Tuple[List[CellId], bool]:
    layout = ev.layout
    if isinstance(target, VarRef):
        return [layout.scalar_cell(target.var)], True
    if isinstance(target, Field):
        return [layout.field_cell(target.base.var, target.name)], True
    inside = ev.index_range(target)
    if inside.is_bottom:
        return [], True
    cells = layout.element_cells(target.base.var, int(inside.lo), int(inside.hi))
    strong = len(cells) == 1 and not layout.var(target.base.var).shrunk
    return cells, strong


def _notify(ctx: AnalysisContext, before: AbstractEnv, after: AbstractEnv, cells: List[CellId], strong: bool, rhs: Expr, lf: Optional[LinearForm]) -> AbstractEnv:
    touched: Dict[str, Binding] = {}
    env = after
    for cell in cells:
        for b in ctx.bindings_for(cell):
            store = env.store(b.pack_id)
            if strong:
                new = b.domain.assign(ctx, before, env, store, b.pack, cell, rhs, lf)
            else:
                new = b.domain.init_store(ctx, b.pack, env)
            if new is None:
                return AbstractEnv.bottom()
            env = env.set_store(b.pack_id, new)
            touched[b.pack_id] = b
    if touched:
        env = env.reduce(ctx, [b for b in ctx.bindings if b.pack_id in touched])
    return env


def assign(ctx: AnalysisContext, env: AbstractEnv, target: Lvalue, rhs: Expr) -> AbstractEnv:
    """target := rhs。"""
    if env.is_bottom:
        return env
    ev = Evaluator(ctx, env)
    value = ev.eval(rhs)
    cells, strong = _target_cells(ev, target)
    before = ev.refined_env()
    if value.is_bottom or before.is_bottom or not cells:
        return AbstractEnv.bottom()
    lf = None
    if ctx.linearize and rhs.ty != BOOL and not ev.faulty:
        lf = linearize(rhs, ev.interval_of, ev.form_cell, ctx.machine.float_model)
        if lf is not None:
            # 最上位の丸めは単調なので、値の範囲を求めるときは省いてよい
            bound = eval_form(lf, before.interval, include_last=False)
            value = value.meet(as_cell_interval(rhs.ty, bound))
            if value.is_bottom:
                return AbstractEnv.bottom()

    def clocked_of(var: str) -> Optional[ClockedValue]:
        if not ctx.layout.has_var(var):
            return None
        return before.get(ctx.layout.scalar_cell(var)).clocked

    after = before
    clock = before.clock
    for cell in cells:
        old = before.get(cell)
        if strong:
            clocked = lift_assign(rhs, value, clock, clocked_of) if old.clocked is not None else None
            cv = normalize(ctx, cell, CellValue(value, clocked), clock)
        else:
            clocked = old.clocked.join(ClockedValue.from_value(value, clock)) if old.clocked is not None else None
            cv = normalize(ctx, cell, CellValue(old.itv.join(value), clocked), clock)
        after = after.set_value(cell, cv)
        if after.is_bottom:
            return after
    return _notify(ctx, before, after, cells, strong, rhs, lf)


def _zero(kind: str) -> Const:
    return Const({INT: 0, FLOAT: 0.0, BOOL: False}[kind], kind)


def declare(ctx: AnalysisContext, env: AbstractEnv, decl: VarDecl) -> AbstractEnv:
    """ローカル変数の宣言：0 で初期化する（静的変数と揮発性入力はそのまま）。"""
    if env.is_bottom or decl.storage == "static" or decl.is_volatile:
        return env
    ty = decl.ty
    if isinstance(ty, ScalarType):
        return assign(ctx, env, VarRef(decl.name, decl.var, ty.kind), _zero(ty.kind))
    kind = ty.elem.kind if isinstance(ty, ArrayType) else None
    for cell in ctx.layout.var(decl.var).cells:
        k = kind or ctx.layout.info(cell).ty
        env = env.set_value(cell, CellValue(const_interval(_zero(k))))
    return env


def tick(ctx: AnalysisContext, env: AbstractEnv) -> AbstractEnv:
    return env.tick(ctx)


# --- ガード ---------------------------------------------------------------------


def _atom_cells(ctx: AnalysisContext, e: Expr) -> List[CellId]:
    cells = []
    for sub in walk_expr(e):
        if isinstance(sub, VarRef) and sub.var is not None and ctx.layout.has_var(sub.var):
            if isinstance(ctx.layout.var(sub.var).decl.ty, ScalarType):
                cells.append(ctx.layout.scalar_cell(sub.var))
        elif isinstance(sub, Field):
            cells.append(ctx.layout.field_cell(sub.base.var, sub.name))
    return cells


def _refinable(ev: Evaluator, e: Expr) -> Optional[CellId]:
    if isinstance(e, Cast) and e.to == FLOAT and e.operand.ty == INT:
        return ev.strong_cell(e.operand)
    return ev.strong_cell(e)


def _linear_guard(
    ctx: AnalysisContext, env: AbstractEnv, ev: Evaluator, op: str, left: Expr, right: Expr, keep_nan: bool = False
) -> AbstractEnv:
    # keep_nan: 否定した順序比較は NaN でも成り立つので、NaN の可能性は残す
    if op == "!=" or left.ty == BOOL:
        return env
    fm = ctx.machine.float_model
    lf_l = linearize(left, ev.interval_of, ev.form_cell, fm)
    lf_r = linearize(right, ev.interval_of, ev.form_cell, fm)
    if lf_l is None or lf_r is None:
        return env
    d = lf_l.sub(lf_r)
    strict_gap = -1.0 if left.ty == INT else 0.0
    constraints: List[Tuple[LinearForm, float]] = []
    if op in ("<", "<=", "=="):
        constraints.append((d, strict_gap if op == "<" else 0.0))
    if op in (">", ">=", "=="):
        constraints.append((d.neg(), strict_gap if op == ">" else 0.0))
    for form, c in constraints:
        # form ≤ c を満たすように各変数の範囲を絞る
        for cell in form.cells():
            k = form.coeff(cell)
            if not (k.lo > 0 or k.hi < 0):
                continue
            rest = eval_form(form.without(cell), env.interval)
            if rest.is_empty_range:
                continue
            r_hi = fl.sub_up(c, rest.lo)
            if math.isinf(r_hi):
                continue
            if k.lo > 0:
                bound = FloatInterval(-INF, max(fl.div_up(r_hi, k.lo), fl.div_up(r_hi, k.hi)), keep_nan)
            else:
                bound = FloatInterval(min(fl.div_down(r_hi, k.lo), fl.div_down(r_hi, k.hi)), INF, keep_nan)
            env = env.meet_interval(ctx, cell, bound)
            if env.is_bottom:
                return env
    return env


def _guard_atom(ctx: AnalysisContext, env: AbstractEnv, atom: Expr, polarity: bool) -> AbstractEnv:
    ev = Evaluator(ctx, env)
    if isinstance(atom, Binary) and atom.op in CMP_OPS:
        a = ev.eval(atom.left)
        b = ev.eval(atom.right)
        env = ev.refined_env()
        if env.is_bottom:
            return env
        r = guard_cmp(atom.op, a, b, negated=not polarity)
        if r is None:
            return AbstractEnv.bottom()
        for side, itv in ((atom.left, r[0]), (atom.right, r[1])):
            cell = _refinable(ev, side)
            if cell is not None:
                env = env.meet_interval(ctx, cell, itv)
                if env.is_bottom:
                    return env
        if ctx.linearize:
            op = atom.op if polarity else negate_cmp(atom.op)
            env = _linear_guard(ctx, env, ev, op, atom.left, atom.right, keep_nan=(atom.op == "!=") != (not polarity))
    else:
        # 真理値の左辺値
        v = ev.eval(atom)
        env = ev.refined_env()
        want = 1 if polarity else 0
        if env.is_bottom or not v.contains(want):
            return AbstractEnv.bottom()
        cell = ev.strong_cell(atom)
        if cell is not None:
            env = env.meet_interval(ctx, cell, IntInterval(want, want))
    if env.is_bottom:
        return env
    touched = ctx.touching(_atom_cells(ctx, atom))
    for b in touched:
        store = b.domain.guard(ctx, env, env.store(b.pack_id), b.pack, atom, polarity)
        if store is None:
            ctx.mark_useful(b.pack_id)
            return AbstractEnv.bottom()
        env = env.set_store(b.pack_id, store)
    return env.reduce(ctx, touched)


def guard(ctx: AnalysisContext, env: AbstractEnv, cond: Expr, polarity: bool = True) -> AbstractEnv:
    """cond が polarity になる状態だけを残す。"""
    if env.is_bottom:
        return env
    if isinstance(cond, Const):
        return env if bool(cond.value) == polarity else AbstractEnv.bottom()
    if isinstance(cond, Unary) and cond.op == "!":
        return guard(ctx, env, cond.operand, not polarity)
    if isinstance(cond, Binary) and cond.op in ("&&", "||"):
        if (cond.op == "&&") == polarity:
            # 両方が polarity（短絡評価で右辺は左辺の後）
            return guard(ctx, guard(ctx, env, cond.left, polarity), cond.right, polarity)
        # 左辺で決まる場合と、左辺の後に右辺で決まる場合の合併
        first = guard(ctx, env, cond.left, polarity)
        second = guard(ctx, guard(ctx, env, cond.left, not polarity), cond.right, polarity)
        return first.join(ctx, second)
    return _guard_atom(ctx, env, cond, polarity)


__all__ = [
    "Evaluator",
    "assign",
    "declare",
    "guard",
    "linear_form",
    "tick",
]
