"""
`.mc` ソースのパーサ（lark, LALR）。

結果は型のついていない AST（`VarRef.var` と `ty` は None）。
"""
from __future__ import annotations

import itertools
from dataclasses import replace
from typing import List, Optional, Tuple

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from ..errors import Location, ParseError, UnsupportedConstructError
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
    Field,
    FunDef,
    If,
    Index,
    ProgramPoint,
    RecordType,
    Return,
    ScalarType,
    Tick,
    Unary,
    VarDecl,
    VarRef,
    While,
)

mc_grammar = r"""
    start: item*

    ?item: var_decl
         | fun_def

    var_decl: [STATIC] type_spec NAME [array_suffix] ";"
            | VOLATILE scalar NAME [range_spec] ";"            -> volatile_decl

    range_spec: "range" "[" signed "," signed "]"
    ?signed: number
           | "-" number                                        -> negate
           | TRUE                                              -> true
           | FALSE                                             -> false

    ?type_spec: scalar
             | VOID                                            -> void_t
             | "struct" "{" field_decl* "}"                    -> struct_type
             | "enum" "{" NAME ("," NAME)* "}"                 -> enum_type
    field_decl: NAME ":" scalar ";"
    array_suffix: "[" INT "]"

    scalar: INT_T | FLOAT_T | BOOL_T

    fun_def: type_spec NAME "(" [param ("," param)*] ")" block
    param: [INOUT] scalar NAME

    block: LBRACE stmt* "}"

    ?stmt: var_decl                                            -> decl_stmt
         | lvalue "=" expr ";"                                 -> assign
         | NAME "(" [expr ("," expr)*] ")" ";"                 -> call_stmt
         | if_stmt
         | WHILE "(" expr ")" block                            -> while_stmt
         | RETURN [expr] ";"                                   -> return_stmt
         | TICK ";"                                            -> tick_stmt
         | block

    if_stmt: IF "(" expr ")" block else_part?
    else_part: ELSE (block | if_stmt)

    ?lvalue: NAME                                              -> var
           | NAME "[" expr "]"                                 -> index
           | NAME "." NAME                                     -> field

    ?expr: or_expr
    ?or_expr: and_expr
            | or_expr "||" and_expr                            -> or_
    ?and_expr: cmp
             | and_expr "&&" cmp                               -> and_
    ?cmp: shift
        | shift "<" shift                                      -> lt
        | shift "<=" shift                                     -> le
        | shift ">" shift                                      -> gt
        | shift ">=" shift                                     -> ge
        | shift "==" shift                                     -> eq
        | shift "!=" shift                                     -> ne
    ?shift: sum
          | shift "<<" sum                                     -> shl
          | shift ">>" sum                                     -> shr
    ?sum: product
        | sum "+" product                                      -> add
        | sum "-" product                                      -> sub
    ?product: unary
            | product "*" unary                                -> mul
            | product "/" unary                                -> div
            | product "%" unary                                -> mod
    ?unary: postfix
          | "-" unary                                          -> neg
          | "!" unary                                          -> not_
          | "(" scalar ")" unary                               -> cast
    ?postfix: atom
            | NAME "[" expr "]"                                -> index
            | NAME "." NAME                                    -> field
            | NAME "(" [expr ("," expr)*] ")"                  -> call
    ?atom: NAME                                                -> var
         | number
         | TRUE                                                -> true
         | FALSE                                               -> false
         | "(" expr ")"

    ?number: FLOAT                                             -> float
           | INT                                               -> int

    STATIC: "static"
    VOLATILE: "volatile"
    INOUT: "inout"
    VOID: "void"
    INT_T: "int"
    FLOAT_T: "float"
    BOOL_T: "bool"
    IF: "if"
    ELSE: "else"
    WHILE: "while"
    RETURN: "return"
    TICK: "wait_tick"
    TRUE: "true"
    FALSE: "false"
    LBRACE: "{"

    NAME: /[A-Za-z_][A-Za-z0-9_]*/
    FLOAT: /(\d+\.\d*|\.\d+)([eE][+-]?\d+)?|\d+[eE][+-]?\d+/
    INT: /\d+/

    COMMENT: /\/\/[^\n]*/ | /\/\*(.|\n)*?\*\//
    %import common.WS
    %ignore WS
    %ignore COMMENT
"""

_PARSER = Lark(mc_grammar, parser="lalr", propagate_positions=True, maybe_placeholders=True)

_BINOPS = {
    "or_": "||",
    "and_": "&&",
    "lt": "<",
    "le": "<=",
    "gt": ">",
    "ge": ">=",
    "eq": "==",
    "ne": "!=",
    "shl": "<<",
    "shr": ">>",
    "add": "+",
    "sub": "-",
    "mul": "*",
    "div": "/",
    "mod": "%",
}


class _Builder(Transformer):
    """lark の木を AST ノードへ変換する。"""

    def __init__(self, file: str) -> None:
        super().__init__()
        self.file = file
        self._uids = itertools.count()

    def _pt(self, meta) -> ProgramPoint:
        if getattr(meta, "empty", True):
            return ProgramPoint(self.file, 0, 0, next(self._uids))
        return ProgramPoint(self.file, meta.line, meta.column, next(self._uids))

    def _tok_pt(self, tok: Token) -> ProgramPoint:
        return ProgramPoint(self.file, tok.line, tok.column, next(self._uids))

    # --- 宣言 ---

    def start(self, items):
        return list(items)

    def scalar(self, items):
        return ScalarType(str(items[0]))

    def void_t(self, items):
        # 戻り値の型としてだけ使える
        return None

    def struct_type(self, items):
        return RecordType(tuple(items))

    def field_decl(self, items):
        name, ty = items
        return (str(name), ty)

    def enum_type(self, items):
        return ScalarType("int", tuple(str(t) for t in items))

    def array_suffix(self, items):
        return int(items[0])

    @v_args(meta=True)
    def var_decl(self, meta, items):
        static, ty, name, length = items
        if ty is None:
            raise ParseError(f"variable {name} cannot have type void", self._pt(meta).location())
        if length is not None:
            if not isinstance(ty, ScalarType) or ty.enum:
                raise UnsupportedConstructError("arrays of records or enums are not supported", self._pt(meta).location())
            if length <= 0:
                raise ParseError(f"array {name} must have a positive length", self._pt(meta).location())
            ty = ArrayType(ty, length)
        storage = "static" if static is not None else "global"
        return VarDecl(str(name), ty, storage=storage, point=self._pt(meta))

    @v_args(meta=True)
    def volatile_decl(self, meta, items):
        _, ty, name, rng = items
        if rng is None:
            if ty.kind != "bool":
                raise ParseError(f"volatile input {name} needs a range", self._pt(meta).location())
            rng = (False, True)
        return VarDecl(str(name), ty, storage="global", volatile=rng, point=self._pt(meta))

    def range_spec(self, items):
        return (items[0].value, items[1].value)

    def negate(self, items):
        return Const(-items[0].value, point=items[0].point)

    def param(self, items):
        inout, ty, name = items
        return VarDecl(str(name), ty, storage="param", inout=inout is not None, point=self._tok_pt(name))

    @v_args(meta=True)
    def fun_def(self, meta, items):
        ty, name, *rest = items
        if ty is not None and (not isinstance(ty, ScalarType) or ty.enum):
            raise UnsupportedConstructError(f"function {name} must return a scalar or void", self._pt(meta).location())
        ret = ty.kind if ty is not None else None
        body = rest[-1]
        params = tuple(p for p in rest[:-1] if p is not None)
        return FunDef(str(name), params, ret, body, point=self._pt(meta))

    # --- 文 ---

    def block(self, items):
        lbrace, *stmts = items
        return Block(tuple(stmts), point=self._tok_pt(lbrace))

    def decl_stmt(self, items):
        decl = items[0]
        storage = "static" if decl.storage == "static" else "local"
        if decl.is_volatile:
            raise UnsupportedConstructError("volatile inputs must be declared at top level", decl.point.location())
        decl = replace(decl, storage=storage)
        return DeclStmt(decl, point=decl.point)

    @v_args(meta=True)
    def assign(self, meta, items):
        target, value = items
        return Assign(target, value, point=self._pt(meta))

    @v_args(meta=True)
    def call_stmt(self, meta, items):
        name, *args = items
        call = Call(str(name), tuple(a for a in args if a is not None), point=self._tok_pt(name))
        return CallStmt(call, None, point=self._pt(meta))

    def else_part(self, items):
        return items[1]

    def if_stmt(self, items):
        tok, cond, then, *rest = items
        orelse = rest[0] if rest else None
        if isinstance(orelse, If):
            orelse = Block((orelse,), point=orelse.point)
        return If(cond, then, orelse, point=self._tok_pt(tok))

    def while_stmt(self, items):
        tok, cond, body = items
        return While(cond, body, point=self._tok_pt(tok))

    def return_stmt(self, items):
        tok, value = items
        return Return(value, point=self._tok_pt(tok))

    def tick_stmt(self, items):
        return Tick(point=self._tok_pt(items[0]))

    # --- 式 ---

    def var(self, items):
        return VarRef(str(items[0]), point=self._tok_pt(items[0]))

    def index(self, items):
        name, idx = items
        return Index(VarRef(str(name), point=self._tok_pt(name)), idx, point=self._tok_pt(name))

    def field(self, items):
        name, fname = items
        return Field(VarRef(str(name), point=self._tok_pt(name)), str(fname), point=self._tok_pt(name))

    def call(self, items):
        name, *args = items
        return Call(str(name), tuple(a for a in args if a is not None), point=self._tok_pt(name))

    def int(self, items):
        tok = items[0]
        return Const(int(tok), point=self._tok_pt(tok))

    def float(self, items):
        tok = items[0]
        return Const(float(tok), point=self._tok_pt(tok))

    def true(self, items):
        return Const(True, point=self._tok_pt(items[0]))

    def false(self, items):
        return Const(False, point=self._tok_pt(items[0]))

    @v_args(meta=True)
    def neg(self, meta, items):
        operand = items[0]
        # 数値リテラルの符号はリテラルに畳み込む
        if isinstance(operand, Const) and not isinstance(operand.value, bool):
            return Const(-operand.value, point=self._pt(meta))
        return Unary("-", operand, point=self._pt(meta))

    @v_args(meta=True)
    def not_(self, meta, items):
        return Unary("!", items[0], point=self._pt(meta))

    @v_args(meta=True)
    def cast(self, meta, items):
        ty, operand = items
        return Cast(ty.kind, operand, point=self._pt(meta))

    def __default__(self, data, children, meta):
        if data in _BINOPS:
            left, right = children
            # 演算子の位置は左オペランドの位置で代用する
            return Binary(_BINOPS[data], left, right, point=self._pt(meta))
        return super().__default__(data, children, meta)


def parse(text: str, file: str = "<input>") -> Tuple[List[VarDecl], List[FunDef]]:
    """1 つのソース単位をパースし、(大域宣言, 関数定義) を返す。"""
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as exc:
        raise ParseError(f"syntax error: {_describe(exc)}", Location(file, exc.line, exc.column)) from None
    try:
        items = _Builder(file).transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, (ParseError, UnsupportedConstructError)):
            raise exc.orig_exc from None
        raise
    decls = [it for it in items if isinstance(it, VarDecl)]
    funs = [it for it in items if isinstance(it, FunDef)]
    return decls, funs


def _describe(exc: UnexpectedInput) -> str:
    token: Optional[Token] = getattr(exc, "token", None)
    if token is not None:
        if token.type == "$END":
            return "unexpected end of input"
        return f"unexpected {token.value!r}"
    char = getattr(exc, "char", None)
    if char is not None:
        return f"unexpected character {char!r}"
    return exc.__class__.__name__
