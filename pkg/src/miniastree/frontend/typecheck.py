"""
連結・名前解決・型検査。

- 変数ごとに一意な id を振る（大域は名前そのまま、関数内は `f.x`）
- 暗黙の型変換を `Cast(implicit=True)` として明示する
- 列挙定数を整数定数に置き換える
- 再帰呼び出し、式の中の関数呼び出し、条件式の中の呼び出しは拒否する
- すべてのノードに通し番号（uid）を振り直す
"""
from __future__ import annotations

import itertools
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from ..errors import Location, TypeCheckError, UnsupportedConstructError
from .ast import (
    BOOL,
    BOOL_OPS,
    CMP_OPS,
    FLOAT,
    INT,
    ArrayType,
    Assign,
    Binary,
    Block,
    Call,
    CallStmt,
    Cast,
    Const,
    DeclStmt,
    Expr,
    Field,
    FunDef,
    If,
    Index,
    Lvalue,
    Program,
    ProgramPoint,
    RecordType,
    Return,
    ScalarType,
    Stmt,
    Tick,
    Unary,
    VarDecl,
    VarRef,
    While,
    walk_expr,
)

RET_NAME = "$ret"


def _err(msg: str, point: ProgramPoint) -> TypeCheckError:
    return TypeCheckError(msg, point.location())


def _unsupported(msg: str, point: ProgramPoint) -> UnsupportedConstructError:
    return UnsupportedConstructError(msg, point.location())


class _Checker:
    def __init__(self, globals_: Sequence[VarDecl], functions: Sequence[FunDef], entry: str) -> None:
        self._uids = itertools.count()
        self.entry = entry
        self.functions: Dict[str, FunDef] = {}
        for fn in functions:
            if fn.name in self.functions:
                raise _err(f"function {fn.name} defined twice", fn.point)
            self.functions[fn.name] = fn
        self.enum_consts: Dict[str, int] = {}
        self.globals: Dict[str, VarDecl] = {}
        self.global_order: List[VarDecl] = []
        for d in globals_:
            if d.name in self.globals or d.name in self.functions:
                raise _err(f"{d.name} declared twice", d.point)
            self._collect_enum(d)
            typed = self._typed_decl(d, d.name)
            self.globals[d.name] = typed
            self.global_order.append(typed)
        # 関数内のスコープ
        self.scopes: List[Dict[str, VarDecl]] = []
        self.fn: Optional[FunDef] = None
        self.used_ids: Set[str] = set(self.globals)
        self.fn_locals: List[VarDecl] = []
        self.calls: Dict[str, Set[str]] = {}

    # --- 補助 ---

    def _pt(self, point: ProgramPoint) -> ProgramPoint:
        return replace(point, uid=next(self._uids))

    def _collect_enum(self, d: VarDecl) -> None:
        if isinstance(d.ty, ScalarType) and d.ty.enum:
            for i, name in enumerate(d.ty.enum):
                if name in self.enum_consts and self.enum_consts[name] != i:
                    raise _err(f"enumeration constant {name} redefined", d.point)
                self.enum_consts[name] = i

    def _typed_decl(self, d: VarDecl, var: str) -> VarDecl:
        vol = d.volatile
        if vol is not None:
            if not isinstance(d.ty, ScalarType):
                raise _err(f"volatile input {d.name} must be scalar", d.point)
            lo, hi = vol
            kind = d.ty.kind
            if kind == FLOAT:
                lo, hi = float(lo), float(hi)
            elif kind == BOOL:
                if lo not in (0, 1) or hi not in (0, 1):
                    raise _err(f"volatile bool {d.name} has a non-boolean range", d.point)
                lo, hi = bool(lo), bool(hi)
            else:
                if isinstance(lo, float) or isinstance(hi, float):
                    raise _err(f"volatile int {d.name} has a non-integer range", d.point)
                lo, hi = int(lo), int(hi)
            if lo > hi:
                raise _err(f"volatile input {d.name} has an empty range", d.point)
            vol = (lo, hi)
        return replace(d, var=var, volatile=vol, point=self._pt(d.point))

    def _fresh_id(self, fn: str, name: str) -> str:
        base = f"{fn}.{name}"
        var = base
        for n in itertools.count(2):
            if var not in self.used_ids:
                break
            var = f"{base}#{n}"
        self.used_ids.add(var)
        return var

    def _lookup(self, name: str, point: ProgramPoint) -> VarDecl:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        if name in self.globals:
            return self.globals[name]
        raise _err(f"undeclared variable {name}", point)

    def _declare(self, d: VarDecl) -> VarDecl:
        assert self.fn is not None
        scope = self.scopes[-1]
        if d.name in scope:
            raise _err(f"{d.name} declared twice in the same block", d.point)
        self._collect_enum(d)
        typed = self._typed_decl(d, self._fresh_id(self.fn.name, d.name))
        scope[d.name] = typed
        if typed.storage == "static":
            self.global_order.append(typed)
        else:
            self.fn_locals.append(typed)
        return typed

    # --- 式 ---

    def convert(self, e: Expr, to: str, point: ProgramPoint, what: str) -> Expr:
        ty = e.ty
        if ty == to:
            return e
        if {ty, to} == {INT, FLOAT}:
            return Cast(to, e, implicit=True, point=self._pt(e.point))
        raise _err(f"cannot convert {ty} to {to} in {what}", point)

    def expr(self, e: Expr, allow_call: bool = False) -> Expr:
        if isinstance(e, Const):
            v = e.value
            ty = BOOL if isinstance(v, bool) else FLOAT if isinstance(v, float) else INT
            return Const(v, ty, point=self._pt(e.point))
        if isinstance(e, VarRef):
            if e.name in self.enum_consts and not self._shadowed(e.name):
                return Const(self.enum_consts[e.name], INT, point=self._pt(e.point))
            d = self._lookup(e.name, e.point)
            if not isinstance(d.ty, ScalarType):
                raise _err(f"{e.name} is not a scalar variable", e.point)
            return VarRef(e.name, d.var, d.ty.kind, point=self._pt(e.point))
        if isinstance(e, Index):
            d = self._lookup(e.base.name, e.base.point)
            if not isinstance(d.ty, ArrayType):
                raise _err(f"{e.base.name} is not an array", e.point)
            idx = self.expr(e.index)
            if idx.ty != INT:
                raise _err("array index must be an int", e.index.point)
            base = VarRef(e.base.name, d.var, None, point=self._pt(e.base.point))
            return Index(base, idx, d.ty.elem.kind, point=self._pt(e.point))
        if isinstance(e, Field):
            d = self._lookup(e.base.name, e.base.point)
            if not isinstance(d.ty, RecordType):
                raise _err(f"{e.base.name} is not a record", e.point)
            fty = d.ty.field_type(e.name)
            if fty is None:
                raise _err(f"record {e.base.name} has no field {e.name}", e.point)
            base = VarRef(e.base.name, d.var, None, point=self._pt(e.base.point))
            return Field(base, e.name, fty.kind, point=self._pt(e.point))
        if isinstance(e, Unary):
            operand = self.expr(e.operand)
            if e.op == "-":
                if operand.ty not in (INT, FLOAT):
                    raise _err("unary - needs a number", e.point)
                return Unary("-", operand, operand.ty, point=self._pt(e.point))
            if operand.ty != BOOL:
                raise _err("! needs a bool", e.point)
            return Unary("!", operand, BOOL, point=self._pt(e.point))
        if isinstance(e, Cast):
            operand = self.expr(e.operand)
            if e.to == BOOL or operand.ty == BOOL:
                raise _err("casts to or from bool are not supported", e.point)
            return Cast(e.to, operand, implicit=e.implicit, point=self._pt(e.point))
        if isinstance(e, Binary):
            return self.binary(e)
        if isinstance(e, Call):
            if not allow_call:
                raise _unsupported("function calls are only allowed as statements or as the whole right-hand side", e.point)
            return self.call(e)
        raise TypeError(f"unknown expression {e!r}")

    def _shadowed(self, name: str) -> bool:
        return any(name in scope for scope in self.scopes) or name in self.globals

    def binary(self, e: Binary) -> Expr:
        left = self.expr(e.left)
        right = self.expr(e.right)
        op = e.op
        pt = self._pt(e.point)
        if op in BOOL_OPS:
            if left.ty != BOOL or right.ty != BOOL:
                raise _err(f"{op} needs bool operands", e.point)
            return Binary(op, left, right, BOOL, point=pt)
        if op in CMP_OPS:
            if left.ty == BOOL or right.ty == BOOL:
                if left.ty != right.ty or op not in ("==", "!="):
                    raise _err(f"cannot compare {left.ty} and {right.ty} with {op}", e.point)
                return Binary(op, left, right, BOOL, point=pt)
            left, right = self._promote(left, right)
            return Binary(op, left, right, BOOL, point=pt)
        if left.ty == BOOL or right.ty == BOOL:
            raise _err(f"{op} needs numeric operands", e.point)
        if op in ("%", "<<", ">>"):
            if left.ty != INT or right.ty != INT:
                raise _err(f"{op} needs int operands", e.point)
            return Binary(op, left, right, INT, point=pt)
        left, right = self._promote(left, right)
        return Binary(op, left, right, left.ty, point=pt)

    def _promote(self, left: Expr, right: Expr) -> Tuple[Expr, Expr]:
        if left.ty == right.ty:
            return left, right
        if left.ty == INT:
            return Cast(FLOAT, left, implicit=True, point=self._pt(left.point)), right
        return left, Cast(FLOAT, right, implicit=True, point=self._pt(right.point))

    def condition(self, e: Expr) -> Expr:
        for sub in walk_expr(e):
            if isinstance(sub, Call):
                raise _unsupported("function calls in conditions must be hoisted into a variable first", sub.point)
        c = self.expr(e)
        if c.ty == INT:
            return Binary("!=", c, Const(0, INT, point=self._pt(e.point)), BOOL, point=self._pt(e.point))
        if c.ty != BOOL:
            raise _err("condition must be a bool or an int", e.point)
        return c

    def call(self, e: Call) -> Call:
        assert self.fn is not None
        fn = self.functions.get(e.fn)
        if fn is None:
            raise _err(f"undefined function {e.fn}", e.point)
        if len(e.args) != len(fn.params):
            raise _err(f"{e.fn} expects {len(fn.params)} arguments, got {len(e.args)}", e.point)
        self.calls.setdefault(self.fn.name, set()).add(e.fn)
        args = []
        for a, p in zip(e.args, fn.params):
            if isinstance(a, Call):
                raise _unsupported("nested function calls are not supported", a.point)
            assert isinstance(p.ty, ScalarType)
            ta = self.expr(a)
            if p.inout:
                if not isinstance(ta, (VarRef, Index, Field)):
                    raise _err(f"inout parameter {p.name} needs a variable argument", a.point)
                if ta.ty != p.ty.kind:
                    raise _err(f"inout parameter {p.name} needs a {p.ty.kind} argument", a.point)
                self._check_writable(ta)
                args.append(ta)
            else:
                args.append(self.convert(ta, p.ty.kind, a.point, f"argument {p.name}"))
        return Call(e.fn, tuple(args), fn.ret, point=self._pt(e.point))

    def _check_writable(self, lv: Lvalue) -> None:
        base = lv if isinstance(lv, VarRef) else lv.base
        d = self._lookup(base.name, base.point)
        if d.is_volatile:
            raise _err(f"volatile input {base.name} cannot be written", lv.point)

    def lvalue(self, lv: Lvalue) -> Lvalue:
        if isinstance(lv, VarRef) and lv.name in self.enum_consts and not self._shadowed(lv.name):
            raise _err(f"cannot assign to enumeration constant {lv.name}", lv.point)
        t = self.expr(lv)
        if not isinstance(t, (VarRef, Index, Field)):
            raise _err("invalid assignment target", lv.point)
        self._check_writable(t)
        return t

    # --- 文 ---

    def block(self, b: Block) -> Block:
        self.scopes.append({})
        try:
            stmts = tuple(self.stmt(s) for s in b.stmts)
        finally:
            self.scopes.pop()
        return Block(stmts, point=self._pt(b.point))

    def stmt(self, s: Stmt) -> Stmt:
        assert self.fn is not None
        if isinstance(s, Block):
            return self.block(s)
        if isinstance(s, DeclStmt):
            return DeclStmt(self._declare(s.decl), point=self._pt(s.point))
        if isinstance(s, Assign):
            target = self.lvalue(s.target)
            if isinstance(s.value, Call):
                call = self.call(s.value)
                callee = self.functions[s.value.fn]
                if callee.ret is None:
                    raise _err(f"{callee.name} does not return a value", s.point)
                ret = VarRef(RET_NAME, f"{callee.name}.{RET_NAME}", callee.ret, point=self._pt(s.point))
                result = self.convert(ret, target.ty, s.point, "assignment")
                return CallStmt(call, target, result, point=self._pt(s.point))
            value = self.convert(self.expr(s.value), target.ty, s.point, "assignment")
            return Assign(target, value, point=self._pt(s.point))
        if isinstance(s, CallStmt):
            return CallStmt(self.call(s.call), None, None, point=self._pt(s.point))
        if isinstance(s, If):
            cond = self.condition(s.cond)
            then = self.block(s.then)
            orelse = self.block(s.orelse) if s.orelse is not None else None
            return If(cond, then, orelse, point=self._pt(s.point))
        if isinstance(s, While):
            cond = self.condition(s.cond)
            return While(cond, self.block(s.body), point=self._pt(s.point))
        if isinstance(s, Return):
            if s.value is None:
                if self.fn.ret is not None:
                    raise _err(f"{self.fn.name} must return a {self.fn.ret}", s.point)
                return Return(None, point=self._pt(s.point))
            if self.fn.ret is None:
                raise _err(f"void function {self.fn.name} returns a value", s.point)
            value = self.convert(self.expr(s.value), self.fn.ret, s.point, "return")
            return Return(value, point=self._pt(s.point))
        if isinstance(s, Tick):
            return Tick(point=self._pt(s.point))
        raise TypeError(f"unknown statement {s!r}")

    def function(self, fn: FunDef) -> FunDef:
        self.fn = fn
        self.fn_locals = []
        self.scopes = [{}]
        params = []
        for p in fn.params:
            if not isinstance(p.ty, ScalarType):
                raise _err(f"parameter {p.name} must be scalar", p.point)
            if p.name in self.scopes[0]:
                raise _err(f"parameter {p.name} declared twice", p.point)
            tp = self._typed_decl(p, self._fresh_id(fn.name, p.name))
            self.scopes[0][p.name] = tp
            params.append(tp)
        body = self.block(fn.body)
        ret_var = None
        if fn.ret is not None:
            ret_var = VarDecl(RET_NAME, ScalarType(fn.ret), storage="local", var=f"{fn.name}.{RET_NAME}", point=self._pt(fn.point))
        self.fn = None
        return FunDef(fn.name, tuple(params), fn.ret, body, ret_var, tuple(self.fn_locals), point=self._pt(fn.point))

    def check_recursion(self) -> None:
        state: Dict[str, int] = {}

        def visit(name: str, path: List[str]) -> None:
            state[name] = 1
            for callee in sorted(self.calls.get(name, ())):
                if state.get(callee) == 1:
                    cycle = " -> ".join(path[path.index(callee):] + [callee]) if callee in path else callee
                    raise _unsupported(f"recursion is not supported ({cycle})", self.functions[callee].point)
                if callee not in state:
                    visit(callee, path + [callee])
            state[name] = 2

        for name in self.functions:
            if name not in state:
                visit(name, [name])


def check(globals_: Sequence[VarDecl], functions: Sequence[FunDef], entry: str = "main") -> Program:
    """連結済みの宣言と関数から型付きの Program を作る。"""
    ck = _Checker(globals_, functions, entry)
    if entry not in ck.functions:
        raise TypeCheckError(f"entry function {entry} is not defined", Location("<program>", 0, 0))
    entry_fn = ck.functions[entry]
    if entry_fn.params:
        raise _err(f"entry function {entry} must not take parameters", entry_fn.point)
    typed = [ck.function(fn) for fn in functions]
    ck.check_recursion()
    return Program(tuple(ck.global_order), tuple(typed), entry)


def link(units: Iterable[Tuple[Sequence[VarDecl], Sequence[FunDef]]], entry: str = "main") -> Program:
    """複数のソース単位を単純に連結して型検査する。"""
    decls: List[VarDecl] = []
    funs: List[FunDef] = []
    for d, f in units:
        decls.extend(d)
        funs.extend(f)
    return check(decls, funs, entry)
