"""
抽象インタプリタ：文の構造に沿った抽象実行と、ループの不動点計算。

ループは反復モード（警告なし）で不変条件を求め、その不変条件から本体を
もう 1 回だけ呼び出し元と同じモードで実行する。最上位は検査モードで動かすので、
各文はちょうど不変条件からの 1 回分だけ警告を出し、地点ごとの不変条件を記録する。

関数呼び出しは本体のインライン展開として扱う（呼び出しごとに別々に解析する）。
分割対象の関数の中では、条件分岐の両側を結合せずに環境の列（トレース）として持ち、
関数の戻り点で結合する。
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from loguru import logger

from .context import AnalysisContext
from .errors import DivergenceError
from .frontend.ast import (
    CMP_OPS,
    Assign,
    Binary,
    Block,
    CallStmt,
    Const,
    DeclStmt,
    FunDef,
    If,
    Program,
    Return,
    Stmt,
    Tick,
    VarDecl,
    VarRef,
    While,
    iter_stmts,
    walk_expr,
)
from .memory import transfer
from .memory.cells import CellId
from .memory.env import AbstractEnv
from .numeric.floats import INF
from .numeric.intervals import FloatInterval

# 到達しうる環境の列（空なら到達しない）。分割しない関数では長さ 1 以下
Flow = List[AbstractEnv]
PointKey = Tuple[int, str]


@dataclass(frozen=True)
class IteratorConfig:
    unroll: int = 1
    delay: int = 2
    # 不安定だった変数が安定したステップでは拡大を 1 回見送る
    delay_on_stable: bool = True
    epsilon: float = 1e-10
    narrowing_steps: int = 2
    max_iterations: int = 200
    partition: FrozenSet[str] = frozenset()
    partition_cap: int = 64


@dataclass
class _Frame:
    fn: FunDef
    partitioned: bool
    # return 文に到達した環境
    returns: Flow = field(default_factory=list)

    def scratch(self) -> "_Frame":
        return _Frame(self.fn, self.partitioned)


def _ref(decl: VarDecl) -> VarRef:
    return VarRef(decl.name, decl.var, decl.ty.kind)


class AbstractInterpreter:
    def __init__(self, program: Program, ctx: AnalysisContext, config: IteratorConfig = IteratorConfig()) -> None:
        self.program = program
        self.ctx = ctx
        self.config = config
        self.quiet = ctx.with_alarms(None)
        # 検査モードで通った地点ごとの不変条件（呼び出し文脈をまたいで結合）
        self.invariants: Dict[PointKey, AbstractEnv] = {}

    def run(self, env: Optional[AbstractEnv] = None) -> AbstractEnv:
        """入口関数を解析し、終了時の環境を返す。"""
        fn = self.program.function(self.program.entry)
        if fn is None:
            raise ValueError(f"entry function {self.program.entry} not found")
        if env is None:
            env = AbstractEnv.initial(self.ctx)
        return self._join(self.ctx, self.call_body(self.ctx, fn, [env]))

    # --- 環境の列 ---

    def _join(self, ctx: AnalysisContext, flow: Flow) -> AbstractEnv:
        return reduce(lambda a, b: a.join(ctx, b), flow, AbstractEnv.bottom())

    def _merge(self, ctx: AnalysisContext, flow: Flow, frame: _Frame) -> Flow:
        live = [e for e in flow if not e.is_bottom]
        if len(live) <= 1:
            return live
        if not frame.partitioned:
            return [self._join(ctx, live)]
        cap = max(1, self.config.partition_cap)
        if len(live) > cap:
            # 上限を超えた分は最後のトレースにまとめる
            live = live[: cap - 1] + [self._join(ctx, live[cap - 1 :])]
        ctx.stats.max_partitions = max(ctx.stats.max_partitions, len(live))
        return live

    def _guard(self, ctx: AnalysisContext, flow: Flow, cond, polarity: bool) -> Flow:
        out = []
        for e in flow:
            g = transfer.guard(ctx, e, cond, polarity)
            if not g.is_bottom:
                out.append(g)
        return out

    def _record(self, ctx: AnalysisContext, key: PointKey, flow: Flow) -> None:
        if not ctx.checking or not flow:
            return
        env = self._join(ctx, flow)
        old = self.invariants.get(key)
        self.invariants[key] = env if old is None else old.join(ctx, env)

    # --- 文 ---

    def call_body(self, ctx: AnalysisContext, fn: FunDef, flow: Flow) -> Flow:
        """fn の本体を実行し、戻り点で結合した環境（到達しなければ空）を返す。"""
        frame = _Frame(fn, fn.name in self.config.partition)
        rest = self.exec_block(ctx, fn.body, flow, frame)
        done = [e for e in rest + frame.returns if not e.is_bottom]
        return [self._join(ctx, done)] if done else []

    def exec_block(self, ctx: AnalysisContext, block: Block, flow: Flow, frame: _Frame) -> Flow:
        for s in block.stmts:
            if not flow:
                break
            flow = self.exec_stmt(ctx, s, flow, frame)
        return flow

    def exec_stmt(self, ctx: AnalysisContext, s: Stmt, flow: Flow, frame: _Frame) -> Flow:
        if isinstance(s, Block):
            out = self.exec_block(ctx, s, flow, frame)
        elif isinstance(s, DeclStmt):
            out = [transfer.declare(ctx, e, s.decl) for e in flow]
        elif isinstance(s, Assign):
            out = [transfer.assign(ctx, e, s.target, s.value) for e in flow]
        elif isinstance(s, CallStmt):
            out = self._call(ctx, s, flow)
        elif isinstance(s, If):
            out = self.exec_block(ctx, s.then, self._guard(ctx, flow, s.cond, True), frame)
            orelse = self._guard(ctx, flow, s.cond, False)
            if s.orelse is not None:
                orelse = self.exec_block(ctx, s.orelse, orelse, frame)
            out = out + orelse
        elif isinstance(s, While):
            out = self._loop(ctx, s, flow, frame)
        elif isinstance(s, Return):
            ret = frame.fn.ret_var
            if s.value is not None and ret is not None:
                flow = [transfer.assign(ctx, e, _ref(ret), s.value) for e in flow]
            frame.returns.extend(e for e in flow if not e.is_bottom)
            return []
        elif isinstance(s, Tick):
            out = [transfer.tick(ctx, e) for e in flow]
        else:
            raise TypeError(f"unknown statement {s!r}")
        out = self._merge(ctx, out, frame)
        self._record(ctx, (s.point.uid, "post"), out)
        return out

    def _call(self, ctx: AnalysisContext, s: CallStmt, flow: Flow) -> Flow:
        fn = self.program.function(s.call.fn)
        assert fn is not None
        out: Flow = []
        for env in flow:
            e = env
            for p, a in zip(fn.params, s.call.args):
                e = transfer.assign(ctx, e, _ref(p), a)
            for r in self.call_body(ctx, fn, [e]):
                # inout 引数への書き戻し
                for p, a in zip(fn.params, s.call.args):
                    if p.inout:
                        r = transfer.assign(ctx, r, a, _ref(p))
                if s.target is not None and s.result is not None:
                    r = transfer.assign(ctx, r, s.target, s.result)
                out.append(r)
        return out

    # --- ループ ---

    def _loop(self, ctx: AnalysisContext, s: While, flow: Flow, frame: _Frame) -> Flow:
        key = (s.point.uid, "head")
        ctx.stats.loops += 1
        exits: Flow = []
        cur = flow
        for _ in range(self.config.unroll):
            if not cur:
                break
            self._record(ctx, key, cur)
            exits += self._guard(ctx, cur, s.cond, False)
            cur = self.exec_block(ctx, s.body, self._guard(ctx, cur, s.cond, True), frame)
            cur = self._merge(ctx, cur, frame)
            ctx.stats.unrolled += 1
        if cur:
            head = self.fixpoint(s, self._join(ctx, cur), frame)
            self._record(ctx, key, [head])
            exits += self._guard(ctx, [head], s.cond, False)
            self.exec_block(ctx, s.body, self._guard(ctx, [head], s.cond, True), frame)
        return exits

    def fixpoint(self, s: While, entry: AbstractEnv, frame: _Frame) -> AbstractEnv:
        """entry から始めたループ先頭の不変条件（反復モードで計算する）。"""
        ctx = self.quiet
        cfg = self.config
        scratch = frame.scratch()

        def step(x: AbstractEnv) -> AbstractEnv:
            body = self.exec_block(ctx, s.body, self._guard(ctx, [x], s.cond, True), scratch)
            return entry.join(ctx, self._join(ctx, body))

        x = entry
        unstable_before: Set[CellId] = set()
        deferred: Set[CellId] = set()
        widened: Set[CellId] = set()
        widenings = delayed = 0
        i = 0
        while True:
            i += 1
            if i > cfg.max_iterations:
                logger.error("{}: loop did not stabilize within {} iterations", s.point, cfg.max_iterations)
                raise DivergenceError(f"loop did not stabilize within {cfg.max_iterations} iterations", s.point)
            y = step(x)
            if y.leq(ctx, x):
                break
            y = y.perturb(ctx, cfg.epsilon, base=x)
            unstable = set(x.unstable_cells(y))
            if i <= cfg.delay:
                x = x.join(ctx, y)
            else:
                settled = unstable_before - unstable - deferred
                if cfg.delay_on_stable and settled:
                    # 各セルが見送りを起こせるのは 1 回だけ
                    deferred |= settled
                    delayed += 1
                    x = x.join(ctx, y)
                else:
                    widenings += 1
                    widened |= unstable
                    x = x.widen(ctx, y)
            unstable_before = unstable

        narrowings = 0
        for _ in range(cfg.narrowing_steps):
            n = x.narrow(ctx, step(x))
            if n == x or not step(n).leq(ctx, n):
                break
            x = n
            narrowings += 1
        if cfg.narrowing_steps > 0 and widened:
            x, tightened = self._tighten(ctx, s, x, step, widened)
            narrowings += tightened

        stats = ctx.stats
        stats.iterations += i
        stats.widenings += widenings
        stats.delayed += delayed
        stats.narrowings += narrowings
        logger.debug(
            "{}: loop stable after {} iterations ({} widenings, {} delayed, {} narrowing steps)",
            s.point,
            i,
            widenings,
            delayed,
            narrowings,
        )
        return x

    def _tighten(self, ctx: AnalysisContext, s: While, x: AbstractEnv, step, cells: Set[CellId]) -> Tuple[AbstractEnv, int]:
        """
        拡大したセルの上下界を、ループ内の比較に現れる定数 c（と c ± 1）まで詰めてみる。

        詰めた環境 x' について step(x') ⊑ x' が成り立つときだけ採用する
        （入口の環境を含む後不動点なので、ループ先頭の不変条件として健全）。
        縮小では抜けられない、条件の外側で値が止まる分岐（if (x < 100) x = x + 1）に効く。
        """
        consts = _guard_constants(s)
        if not consts:
            return x, 0
        count = 0
        for cell in sorted(cells):
            itv = x.interval(cell)
            if itv.is_bottom:
                continue
            for c in sorted(v for v in consts if itv.lo <= v < itv.hi):
                t = x.meet_interval(ctx, cell, FloatInterval(-INF, float(c)))
                if not t.is_bottom and step(t).leq(ctx, t):
                    x, count = t, count + 1
                    break
            itv = x.interval(cell)
            for c in sorted((v for v in consts if itv.lo < v <= itv.hi), reverse=True):
                t = x.meet_interval(ctx, cell, FloatInterval(float(c), INF))
                if not t.is_bottom and step(t).leq(ctx, t):
                    x, count = t, count + 1
                    break
        return x, count


def _guard_constants(s: While) -> List[float]:
    """ループ条件と本体の比較に現れる数値定数 c と c ± 1。"""
    conds = [s.cond] + [t.cond for t in iter_stmts(s.body) if isinstance(t, (If, While))]
    out: Set[float] = set()
    for cond in conds:
        for e in walk_expr(cond):
            if not isinstance(e, Binary) or e.op not in CMP_OPS:
                continue
            for side in (e.left, e.right):
                if isinstance(side, Const) and not isinstance(side.value, bool):
                    out.update((side.value - 1, side.value, side.value + 1))
    return sorted(out)


def analyze_program(
    program: Program, ctx: AnalysisContext, config: IteratorConfig = IteratorConfig()
) -> Tuple[AbstractEnv, Dict[PointKey, AbstractEnv]]:
    """program を解析し、終了時の環境と地点ごとの不変条件を返す。"""
    interp = AbstractInterpreter(program, ctx, config)
    final = interp.run()
    return final, interp.invariants
