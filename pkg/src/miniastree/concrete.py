"""
具体意味論のインタプリタ（差分テストの基準）。

- float は IEEE 倍精度の最近接丸め（fma は使わない）
- int はマシン幅を超えたらオーバーフローとして停止する（ラップアラウンドしない）
- 揮発性入力は読むたびにシード付き乱数で決まる（範囲の端点を多めに出す）
- `wait_tick` の回数と実行文数に上限がある
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .alarms import AlarmKind
from .errors import ConcreteFault
from .frontend.ast import (
    BOOL,
    CMP_OPS,
    FLOAT,
    INT,
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
    Return,
    ScalarType,
    Stmt,
    Tick,
    Unary,
    VarDecl,
    VarRef,
    While,
)
from .memory.cells import CLOCK, CellId, Layout
from .numeric.intervals import DEFAULT_MACHINE, Machine

Value = object
# 不変量の記録位置：(uid, "post") は文の直後、(uid, "head") はループ先頭
PointKey = Tuple[int, str]


# --- 演算 -----------------------------------------------------------------------


def _check_int(v: int, machine: Machine, point: Optional[ProgramPoint]) -> int:
    if v < machine.int_min or v > machine.int_max:
        raise ConcreteFault(AlarmKind.OVERFLOW, point)
    return v


def _check_float(v: float, point: Optional[ProgramPoint]) -> float:
    if math.isinf(v):
        raise ConcreteFault(AlarmKind.OVERFLOW, point)
    if v != v:
        raise ConcreteFault(AlarmKind.NAN, point)
    return v


def _c_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def _c_mod(a: int, b: int) -> int:
    r = abs(a) % abs(b)
    return r if a >= 0 else -r


def binary_op(op: str, a, b, kind: str, machine: Machine = DEFAULT_MACHINE, point: Optional[ProgramPoint] = None):
    """オペランドの型 kind での二項演算（&& と || は呼び出し側で短絡評価する）。"""
    if op in CMP_OPS:
        return {
            "<": a < b,
            "<=": a <= b,
            "==": a == b,
            "!=": a != b,
            ">": a > b,
            ">=": a >= b,
        }[op]
    if kind == INT:
        if op == "+":
            return _check_int(a + b, machine, point)
        if op == "-":
            return _check_int(a - b, machine, point)
        if op == "*":
            return _check_int(a * b, machine, point)
        if op in ("/", "%"):
            if b == 0:
                raise ConcreteFault(AlarmKind.DIV_ZERO, point)
            if op == "/":
                return _check_int(_c_div(a, b), machine, point)
            if a == machine.int_min and b == -1:
                raise ConcreteFault(AlarmKind.OVERFLOW, point)
            return _c_mod(a, b)
        if op in ("<<", ">>"):
            if b < 0 or b > machine.int_bits - 1:
                raise ConcreteFault(AlarmKind.SHIFT, point)
            if op == "<<":
                return _check_int(a * (1 << b), machine, point)
            return a >> b
        raise ValueError(f"unknown int operator {op}")
    if kind == FLOAT:
        if op == "+":
            return _check_float(a + b, point)
        if op == "-":
            return _check_float(a - b, point)
        if op == "*":
            return _check_float(a * b, point)
        if op == "/":
            if b == 0.0:
                raise ConcreteFault(AlarmKind.DIV_ZERO, point)
            return _check_float(a / b, point)
        raise ValueError(f"unknown float operator {op}")
    raise ValueError(f"operator {op} on {kind}")


def unary_op(op: str, a, kind: str, machine: Machine = DEFAULT_MACHINE, point: Optional[ProgramPoint] = None):
    if op == "!":
        return not a
    if kind == INT:
        return _check_int(-a, machine, point)
    return -a


def cast_op(to: str, a, machine: Machine = DEFAULT_MACHINE, point: Optional[ProgramPoint] = None):
    if to == FLOAT:
        return float(a)
    if isinstance(a, float):
        return _check_int(math.trunc(a), machine, point)
    return int(a)


def zero_of(kind: str):
    return {INT: 0, FLOAT: 0.0, BOOL: False}[kind]


# --- 状態と実行 -----------------------------------------------------------------


@dataclass
class ConcreteState:
    # (変数 id, None | 添字 | フィールド名) → 値
    memory: Dict[Tuple[str, object], Value] = field(default_factory=dict)
    clock: int = 0

    def cell_values(self, layout: Layout) -> Dict[CellId, List[Value]]:
        """抽象セルごとの具体値の一覧（縮約配列は全要素）。"""
        out: Dict[CellId, List[Value]] = {CLOCK: [self.clock]}
        for (var, path), v in self.memory.items():
            out.setdefault(layout.concrete_cell(var, path), []).append(v)
        return out

    def snapshot_hash(self) -> int:
        return hash((self.clock, tuple(sorted(self.memory.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))))))


@dataclass
class ConcreteRun:
    trace: List[Tuple[PointKey, int]]
    fault: Optional[ConcreteFault] = None
    ticks: int = 0
    steps: int = 0
    truncated: bool = False


class _Return(Exception):
    pass


class _Stop(Exception):
    pass


Observer = Callable[[PointKey, ConcreteState], None]


class Interpreter:
    """1 回の具体実行。入力列は seed で決まる。"""

    def __init__(
        self,
        program: Program,
        layout: Layout,
        seed: int = 0,
        max_ticks: int = 100,
        max_steps: int = 100_000,
        machine: Machine = DEFAULT_MACHINE,
        observer: Optional[Observer] = None,
        edge_bias: float = 0.25,
    ) -> None:
        self.program = program
        self.layout = layout
        self.machine = machine
        self.max_ticks = max_ticks
        self.max_steps = max_steps
        self.observer = observer
        self.edge_bias = edge_bias
        self.rng = np.random.default_rng(seed)
        self.state = ConcreteState()
        self.trace: List[Tuple[PointKey, int]] = []
        self.steps = 0
        self._volatile: Dict[str, VarDecl] = {}
        for d in program.all_vars():
            self._init_var(d)

    # --- 初期化 ---

    def _init_var(self, d: VarDecl) -> None:
        if d.is_volatile:
            self._volatile[d.var] = d
            return
        ty = d.ty
        if isinstance(ty, ScalarType):
            self.state.memory[(d.var, None)] = zero_of(ty.kind)
        elif hasattr(ty, "length"):
            for i in range(ty.length):
                self.state.memory[(d.var, i)] = zero_of(ty.elem.kind)
        else:
            for fname, fty in ty.fields:
                self.state.memory[(d.var, fname)] = zero_of(fty.kind)

    def _read_input(self, d: VarDecl):
        lo, hi = d.volatile
        kind = d.ty.kind
        if self.rng.random() < self.edge_bias:
            return lo if self.rng.random() < 0.5 else hi
        if kind == BOOL:
            return bool(self.rng.integers(int(lo), int(hi) + 1))
        if kind == INT:
            return int(self.rng.integers(lo, hi + 1))
        return float(self.rng.uniform(lo, hi))

    # --- 実行 ---

    def run(self) -> ConcreteRun:
        fn = self.program.function(self.program.entry)
        assert fn is not None
        fault = None
        truncated = False
        try:
            self._call_body(fn)
        except ConcreteFault as exc:
            fault = exc
        except _Stop:
            truncated = True
        return ConcreteRun(self.trace, fault, self.state.clock, self.steps, truncated)

    def _record(self, key: PointKey) -> None:
        self.trace.append((key, self.state.snapshot_hash()))
        if self.observer is not None:
            self.observer(key, self.state)

    def _call_body(self, fn: FunDef) -> None:
        try:
            self._block(fn.body)
        except _Return:
            pass

    def _block(self, b: Block) -> None:
        for s in b.stmts:
            self._stmt(s)

    def _stmt(self, s: Stmt) -> None:
        self.steps += 1
        if self.steps > self.max_steps:
            raise _Stop()
        if isinstance(s, Block):
            self._block(s)
        elif isinstance(s, DeclStmt):
            if s.decl.storage != "static":
                self._init_var(s.decl)
        elif isinstance(s, Assign):
            value = self.eval(s.value)
            self._write(s.target, value)
        elif isinstance(s, CallStmt):
            self._call(s)
        elif isinstance(s, If):
            if self.eval(s.cond):
                self._block(s.then)
            elif s.orelse is not None:
                self._block(s.orelse)
        elif isinstance(s, While):
            while True:
                self._record((s.point.uid, "head"))
                if not self.eval(s.cond):
                    break
                self._block(s.body)
                self.steps += 1
                if self.steps > self.max_steps:
                    raise _Stop()
        elif isinstance(s, Return):
            fn_ret = self._current_ret
            if s.value is not None and fn_ret is not None:
                self.state.memory[(fn_ret, None)] = self.eval(s.value)
            raise _Return()
        elif isinstance(s, Tick):
            if self.state.clock >= self.max_ticks:
                raise _Stop()
            self.state.clock += 1
        else:
            raise TypeError(f"unknown statement {s!r}")
        self._record((s.point.uid, "post"))

    _current_ret: Optional[str] = None

    def _call(self, s: CallStmt) -> None:
        call = s.call
        fn = self.program.function(call.fn)
        assert fn is not None
        args = [self.eval(a) for a in call.args]
        for p, v in zip(fn.params, args):
            self.state.memory[(p.var, None)] = v
        saved = self._current_ret
        self._current_ret = fn.ret_var.var if fn.ret_var is not None else None
        try:
            self._call_body(fn)
        finally:
            self._current_ret = saved
        for a, p in zip(call.args, fn.params):
            if p.inout:
                self._write(a, self.state.memory[(p.var, None)])
        if s.target is not None and s.result is not None:
            self._write(s.target, self.eval(s.result))

    # --- 式 ---

    def _location(self, lv: Lvalue) -> Tuple[str, object]:
        if isinstance(lv, VarRef):
            return (lv.var, None)
        if isinstance(lv, Index):
            i = self.eval(lv.index)
            length = self.layout.var(lv.base.var).length
            if i < 0 or i >= length:
                raise ConcreteFault(AlarmKind.ARRAY_BOUNDS, lv.point)
            return (lv.base.var, i)
        return (lv.base.var, lv.name)

    def _write(self, lv: Lvalue, value) -> None:
        self.state.memory[self._location(lv)] = value

    def eval(self, e: Expr):
        if isinstance(e, Const):
            return e.value
        if isinstance(e, (VarRef, Index, Field)):
            base = e if isinstance(e, VarRef) else e.base
            d = self._volatile.get(base.var)
            if d is not None:
                return self._read_input(d)
            return self.state.memory[self._location(e)]
        if isinstance(e, Unary):
            return unary_op(e.op, self.eval(e.operand), e.operand.ty, self.machine, e.point)
        if isinstance(e, Cast):
            return cast_op(e.to, self.eval(e.operand), self.machine, e.point)
        if isinstance(e, Binary):
            if e.op == "&&":
                return bool(self.eval(e.left)) and bool(self.eval(e.right))
            if e.op == "||":
                return bool(self.eval(e.left)) or bool(self.eval(e.right))
            a = self.eval(e.left)
            b = self.eval(e.right)
            return binary_op(e.op, a, b, e.left.ty, self.machine, e.point)
        if isinstance(e, Call):
            raise TypeError("calls are statements")
        raise TypeError(f"unknown expression {e!r}")


def run(program: Program, layout: Layout, seed: int = 0, max_ticks: int = 100, **kwargs) -> ConcreteRun:
    """シード seed の入力列で program を 1 回実行する。"""
    return Interpreter(program, layout, seed=seed, max_ticks=max_ticks, **kwargs).run()
