"""
解析対象言語の抽象構文木。

ノードはすべて不変（frozen dataclass）。`point` は比較に含めないので、
位置だけが違う木は等しいとみなされる（整形出力→再パースの往復で使う）。
パーサが作る木では `var` と `ty` が未設定で、型検査がそれらを埋めた木を返す。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple, Union

from ..errors import Location

INT = "int"
FLOAT = "float"
BOOL = "bool"
SCALAR_KINDS = (INT, FLOAT, BOOL)

Number = Union[int, float, bool]


@dataclass(frozen=True)
class ProgramPoint:
    file: str
    line: int
    column: int
    uid: int = -1

    def location(self) -> Location:
        return Location(self.file, self.line, self.column)

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


NO_POINT = ProgramPoint("<none>", 0, 0, -1)


# --- 型 -------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarType:
    kind: str
    # 列挙型は int に落とし、定数名だけ覚えておく
    enum: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ArrayType:
    elem: ScalarType
    length: int


@dataclass(frozen=True)
class RecordType:
    fields: Tuple[Tuple[str, ScalarType], ...]

    def field_type(self, name: str) -> Optional[ScalarType]:
        for fname, fty in self.fields:
            if fname == name:
                return fty
        return None


Type = Union[ScalarType, ArrayType, RecordType]


# --- 式 -------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Number
    ty: Optional[str] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class VarRef:
    name: str
    var: Optional[str] = None
    ty: Optional[str] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Index:
    base: VarRef
    index: "Expr"
    ty: Optional[str] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Field:
    base: VarRef
    name: str
    ty: Optional[str] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    ty: Optional[str] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    ty: Optional[str] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Cast:
    to: str
    operand: "Expr"
    # 型検査が挿入した暗黙の変換
    implicit: bool = field(default=False, compare=False)
    point: ProgramPoint = field(default=NO_POINT, compare=False)

    @property
    def ty(self) -> str:
        return self.to


@dataclass(frozen=True)
class Call:
    fn: str
    args: Tuple["Expr", ...]
    ty: Optional[str] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


Expr = Union[Const, VarRef, Index, Field, Unary, Binary, Cast, Call]
Lvalue = Union[VarRef, Index, Field]

ARITH_OPS = ("+", "-", "*", "/", "%", "<<", ">>")
CMP_OPS = ("<", "<=", "==", "!=", ">", ">=")
BOOL_OPS = ("&&", "||")


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, (Const, VarRef)):
        return ()
    if isinstance(e, Index):
        return (e.base, e.index)
    if isinstance(e, Field):
        return (e.base,)
    if isinstance(e, (Unary, Cast)):
        return (e.operand,)
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, Call):
        return e.args
    raise TypeError(f"not an expression: {e!r}")


def walk_expr(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from walk_expr(c)


def referenced_vars(e: Expr) -> Iterator[str]:
    # 型検査後の一意な変数 id
    for sub in walk_expr(e):
        if isinstance(sub, VarRef) and sub.var is not None:
            yield sub.var


# --- 宣言 -----------------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    ty: Type
    storage: str = "global"  # global | static | local | param
    volatile: Optional[Tuple[Number, Number]] = None
    inout: bool = False
    var: Optional[str] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)

    @property
    def is_volatile(self) -> bool:
        return self.volatile is not None

    @property
    def is_persistent(self) -> bool:
        return self.storage in ("global", "static")


# --- 文 -------------------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    stmts: Tuple["Stmt", ...]
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class DeclStmt:
    decl: VarDecl
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Assign:
    target: Lvalue
    value: Expr
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class CallStmt:
    call: Call
    target: Optional[Lvalue] = None
    # 型検査後：戻り値セルから target へ代入する式（必要なら変換つき）
    result: Optional[Expr] = field(default=None, compare=False)
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then: Block
    orelse: Optional[Block] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Block
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Tick:
    point: ProgramPoint = field(default=NO_POINT, compare=False)


Stmt = Union[Block, DeclStmt, Assign, CallStmt, If, While, Return, Tick]


@dataclass(frozen=True)
class FunDef:
    name: str
    params: Tuple[VarDecl, ...]
    ret: Optional[str]
    body: Block
    # 型検査後：戻り値を受けるセル用の隠し変数と、関数内のローカル宣言
    ret_var: Optional[VarDecl] = None
    locals: Tuple[VarDecl, ...] = ()
    point: ProgramPoint = field(default=NO_POINT, compare=False)


@dataclass(frozen=True)
class Program:
    globals: Tuple[VarDecl, ...]
    functions: Tuple[FunDef, ...]
    entry: str = "main"
    # 未使用として削除した揮発性入力（レポート用）
    pruned_inputs: Tuple[str, ...] = field(default=(), compare=False)

    def function(self, name: str) -> Optional[FunDef]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def all_vars(self) -> Iterator[VarDecl]:
        yield from self.globals
        for fn in self.functions:
            yield from fn.params
            yield from fn.locals
            if fn.ret_var is not None:
                yield fn.ret_var


def iter_stmts(block: Block) -> Iterator[Stmt]:
    """ブロック内の文を（入れ子も含めて）前順にたどる。"""
    for s in block.stmts:
        yield s
        if isinstance(s, Block):
            yield from iter_stmts(s)
        elif isinstance(s, If):
            yield from iter_stmts(s.then)
            if s.orelse is not None:
                yield from iter_stmts(s.orelse)
        elif isinstance(s, While):
            yield from iter_stmts(s.body)


def stmt_exprs(s: Stmt) -> Iterator[Expr]:
    if isinstance(s, Assign):
        yield s.target
        yield s.value
    elif isinstance(s, CallStmt):
        yield s.call
        if s.target is not None:
            yield s.target
    elif isinstance(s, (If, While)):
        yield s.cond
    elif isinstance(s, Return) and s.value is not None:
        yield s.value
