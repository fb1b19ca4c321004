"""
AST を `.mc` ソースへ戻す整形出力。

二項演算は必ず括弧で囲むので、出力を再パースすると同じ木になる。
警告文中の式表示にも使う（型検査が入れた暗黙の変換は表示しない）。
"""
from __future__ import annotations

from typing import List

from .ast import (
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
    Program,
    RecordType,
    Return,
    ScalarType,
    Stmt,
    Tick,
    Type,
    Unary,
    VarDecl,
    VarRef,
    While,
)

_INDENT = "    "


def _const(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v)


def expr_str(e: Expr, show_implicit: bool = False) -> str:
    if isinstance(e, Const):
        return _const(e.value)
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, Index):
        return f"{e.base.name}[{expr_str(e.index, show_implicit)}]"
    if isinstance(e, Field):
        return f"{e.base.name}.{e.name}"
    if isinstance(e, Unary):
        return f"{e.op}{expr_str(e.operand, show_implicit)}"
    if isinstance(e, Binary):
        return f"({expr_str(e.left, show_implicit)} {e.op} {expr_str(e.right, show_implicit)})"
    if isinstance(e, Cast):
        if e.implicit and not show_implicit:
            return expr_str(e.operand, show_implicit)
        return f"({e.to}){expr_str(e.operand, show_implicit)}"
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(expr_str(a, show_implicit) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


def _type_prefix(ty: Type) -> str:
    if isinstance(ty, ScalarType):
        if ty.enum:
            return "enum { " + ", ".join(ty.enum) + " }"
        return ty.kind
    if isinstance(ty, ArrayType):
        return ty.elem.kind
    if isinstance(ty, RecordType):
        fields = " ".join(f"{name}: {fty.kind};" for name, fty in ty.fields)
        return "struct { " + fields + " }"
    raise TypeError(f"unknown type {ty!r}")


def decl_str(d: VarDecl) -> str:
    if d.volatile is not None:
        lo, hi = d.volatile
        return f"volatile {d.ty.kind} {d.name} range [{_const(lo)}, {_const(hi)}];"
    prefix = "static " if d.storage == "static" else ""
    suffix = f"[{d.ty.length}]" if isinstance(d.ty, ArrayType) else ""
    return f"{prefix}{_type_prefix(d.ty)} {d.name}{suffix};"


def _block(b: Block, depth: int) -> List[str]:
    lines = ["{"]
    for s in b.stmts:
        lines.extend(_stmt(s, depth + 1))
    lines.append(_INDENT * depth + "}")
    return lines


def _attach(head: str, block: List[str]) -> List[str]:
    return [head + block[0]] + block[1:]


def _stmt(s: Stmt, depth: int) -> List[str]:
    pad = _INDENT * depth
    if isinstance(s, Block):
        return _attach(pad, _block(s, depth))
    if isinstance(s, DeclStmt):
        return [pad + decl_str(s.decl)]
    if isinstance(s, Assign):
        return [f"{pad}{expr_str(s.target)} = {expr_str(s.value)};"]
    if isinstance(s, CallStmt):
        call = expr_str(s.call)
        return [f"{pad}{expr_str(s.target)} = {call};" if s.target is not None else f"{pad}{call};"]
    if isinstance(s, If):
        lines = _attach(f"{pad}if ({expr_str(s.cond)}) ", _block(s.then, depth))
        if s.orelse is not None:
            orelse = _block(s.orelse, depth)
            lines[-1] += " else " + orelse[0]
            lines.extend(orelse[1:])
        return lines
    if isinstance(s, While):
        return _attach(f"{pad}while ({expr_str(s.cond)}) ", _block(s.body, depth))
    if isinstance(s, Return):
        return [f"{pad}return {expr_str(s.value)};" if s.value is not None else f"{pad}return;"]
    if isinstance(s, Tick):
        return [pad + "wait_tick;"]
    raise TypeError(f"unknown statement {s!r}")


def fun_str(fn: FunDef) -> str:
    params = ", ".join(("inout " if p.inout else "") + f"{p.ty.kind} {p.name}" for p in fn.params)
    return "\n".join(_attach(f"{fn.ret or 'void'} {fn.name}({params}) ", _block(fn.body, 0)))


def program_str(decls, funs) -> str:
    """(宣言, 関数) の組をソースに戻す。"""
    parts = [decl_str(d) for d in decls]
    parts.extend(fun_str(f) for f in funs)
    return "\n".join(parts) + "\n"


def print_program(program: Program) -> str:
    return program_str(program.globals, program.functions)
