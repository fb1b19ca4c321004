"""
型検査後の AST の簡約：定数式の畳み込みと、未使用のグローバル変数の削除。
"""
from __future__ import annotations

from dataclasses import replace
from typing import List, Optional, Set, Tuple

from loguru import logger

from ..concrete import binary_op, cast_op, unary_op
from ..errors import ConcreteFault
from ..numeric.intervals import DEFAULT_MACHINE, Machine
from .ast import (
    Assign,
    Binary,
    Block,
    Call,
    CallStmt,
    Cast,
    Const,
    Expr,
    Field,
    FunDef,
    If,
    Index,
    Program,
    Return,
    Stmt,
    Unary,
    VarRef,
    While,
    iter_stmts,
    referenced_vars,
    stmt_exprs,
)
from .printer import expr_str

# 畳み込み中に見つかった確実な実行時エラー（式, 例外）
FoldFault = Tuple[Expr, ConcreteFault]


class _Folder:
    def __init__(self, machine: Machine) -> None:
        self.machine = machine
        self.faults: List[FoldFault] = []

    def _try(self, e: Expr, compute) -> Expr:
        try:
            return Const(compute(), e.ty, point=e.point)
        except ConcreteFault as exc:
            if not any(f[0] is e for f in self.faults):
                logger.warning("{}: constant expression {} always fails ({})", e.point, expr_str(e), exc.kind.label)
                self.faults.append((e, exc))
            return e

    def expr(self, e: Expr) -> Expr:
        if isinstance(e, (Const, VarRef, Field)):
            return e
        if isinstance(e, Index):
            return replace(e, index=self.expr(e.index))
        if isinstance(e, Unary):
            a = self.expr(e.operand)
            e = replace(e, operand=a)
            if isinstance(a, Const):
                return self._try(e, lambda: unary_op(e.op, a.value, a.ty, self.machine, e.point))
            return e
        if isinstance(e, Cast):
            a = self.expr(e.operand)
            e = replace(e, operand=a)
            if isinstance(a, Const):
                return self._try(e, lambda: cast_op(e.to, a.value, self.machine, e.point))
            return e
        if isinstance(e, Binary):
            left = self.expr(e.left)
            right = self.expr(e.right)
            e = replace(e, left=left, right=right)
            if e.op in ("&&", "||") and isinstance(left, Const):
                decided = (e.op == "&&") != bool(left.value)
                return Const(not (e.op == "&&"), e.ty, point=e.point) if decided else right
            if isinstance(left, Const) and isinstance(right, Const):
                return self._try(e, lambda: binary_op(e.op, left.value, right.value, left.ty, self.machine, e.point))
            return e
        if isinstance(e, Call):
            return replace(e, args=tuple(self.expr(a) for a in e.args))
        raise TypeError(f"unknown expression {e!r}")

    def block(self, b: Block) -> Block:
        stmts: List[Stmt] = []
        for s in b.stmts:
            t = self.stmt(s)
            if t is not None:
                stmts.append(t)
        return replace(b, stmts=tuple(stmts))

    def stmt(self, s: Stmt) -> Optional[Stmt]:
        if isinstance(s, Block):
            return self.block(s)
        if isinstance(s, Assign):
            return replace(s, target=self.expr(s.target), value=self.expr(s.value))
        if isinstance(s, CallStmt):
            target = self.expr(s.target) if s.target is not None else None
            return replace(s, call=self.expr(s.call), target=target)
        if isinstance(s, If):
            cond = self.expr(s.cond)
            if isinstance(cond, Const):
                # 死んだ分岐は消す（宣言のスコープはブロックのまま保つ）
                if cond.value:
                    return self.block(s.then)
                return self.block(s.orelse) if s.orelse is not None else None
            orelse = self.block(s.orelse) if s.orelse is not None else None
            return replace(s, cond=cond, then=self.block(s.then), orelse=orelse)
        if isinstance(s, While):
            cond = self.expr(s.cond)
            if isinstance(cond, Const) and not cond.value:
                return None
            return replace(s, cond=cond, body=self.block(s.body))
        if isinstance(s, Return):
            return replace(s, value=self.expr(s.value)) if s.value is not None else s
        return s


def const_fold(program: Program, machine: Machine = DEFAULT_MACHINE) -> Tuple[Program, List[FoldFault]]:
    """
    すべての葉が定数の式を、具体意味論での値に置き換える。

    評価で確実にエラーになる式（`1/0` など）は畳み込まずに残し、
    (式, 例外) の一覧として返す。解析はその式で必ず警告を出す。
    条件が定数になった `if` と `while (false)` は取り除く。
    """
    folder = _Folder(machine)
    functions = tuple(replace(fn, body=folder.block(fn.body)) for fn in program.functions)
    return replace(program, functions=functions), folder.faults


def _callees(fn: FunDef) -> Set[str]:
    return {s.call.fn for s in iter_stmts(fn.body) if isinstance(s, CallStmt)}


def reachable_functions(program: Program) -> List[FunDef]:
    by_name = {fn.name: fn for fn in program.functions}
    seen: List[str] = []
    todo = [program.entry]
    while todo:
        name = todo.pop()
        if name in seen or name not in by_name:
            continue
        seen.append(name)
        todo.extend(sorted(_callees(by_name[name])))
    return [fn for fn in program.functions if fn.name in seen]


def prune_unused_globals(program: Program) -> Program:
    """
    entry から到達できるコードが一度も参照しないグローバル変数を削除する。

    削除した揮発性入力は設定ミスの可能性があるので警告を出し、
    `pruned_inputs` に残す。到達しない関数も取り除く。
    """
    functions = reachable_functions(program)
    used: Set[str] = set()
    for fn in functions:
        for s in iter_stmts(fn.body):
            for e in stmt_exprs(s):
                used.update(referenced_vars(e))
            if isinstance(s, CallStmt) and s.result is not None:
                used.update(referenced_vars(s.result))
    kept = []
    pruned_inputs = list(program.pruned_inputs)
    for d in program.globals:
        if d.var in used:
            kept.append(d)
        elif d.is_volatile:
            logger.warning("{}: volatile input {} is never read and was removed", d.point, d.name)
            pruned_inputs.append(d.name)
    return replace(program, globals=tuple(kept), functions=tuple(functions), pruned_inputs=tuple(pruned_inputs))


def simplify(program: Program, machine: Machine = DEFAULT_MACHINE) -> Tuple[Program, List[FoldFault]]:
    folded, faults = const_fold(program, machine)
    return prune_unused_globals(folded), faults
