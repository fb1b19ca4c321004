"""
解析の流れ全体：構文解析 → 型検査 → 簡約 → パック → 抽象実行（検査モード）→ レポート。
"""
from __future__ import annotations

import json
import sys
import time
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple

try:
    import resource
except ImportError:  # Windows
    resource = None  # type: ignore[assignment]

from loguru import logger

from .alarms import Alarm, AlarmSink
from .config import DEFAULT_CONFIG, AnalysisConfig
from .context import AnalysisContext, Binding
from .errors import ConfigError, FrontendError
from .frontend.ast import Binary, Const, Expr, Program, ProgramPoint, iter_stmts, stmt_exprs, walk_expr
from .frontend.parser import parse
from .frontend.printer import expr_str
from .frontend.simplify import simplify
from .frontend.typecheck import check
from .iterator import PointKey, analyze_program
from .memory.cells import CellId, Layout
from .memory.env import AbstractEnv
from .memory.transfer import const_interval
from .numeric.intervals import Interval, IntInterval, Machine
from .packing import OCTAGON, PackingResult, compute_packing, filter_useful_packs, read_pack_ids, write_pack_ids
from .registry import DomainInfo, discover_domains, enabled_domains
from .report import Report


def load_program(
    text: str, file: str = "<input>", config: AnalysisConfig = DEFAULT_CONFIG, alarms: Optional[AlarmSink] = None
) -> Program:
    """
    ソースを型付きの簡約済み Program にする（FrontendError を送出しうる）。

    alarms を渡すと、畳み込みで確実にエラーになると分かった式を警告として記録する
    （entry から到達できない関数の中の式は除く）。
    """
    decls, funs = parse(text, file)
    program = check(decls, funs, config.entry)
    program, faults = simplify(program, config.machine())
    if alarms is not None and faults:
        kept = _expr_uids(program)
        for e, fault in faults:
            if e.point.uid in kept:
                alarms.record(e.point, fault.kind, expr_str(e), _fault_witness(e))
    return program


def _expr_uids(program: Program) -> Set[int]:
    return {sub.point.uid for fn in program.functions for s in iter_stmts(fn.body) for e in stmt_exprs(s) for sub in walk_expr(e)}


def _fault_witness(e: Expr) -> Interval:
    # 警告の証拠は解析と同じく、除数・シフト量か演算対象の値
    if isinstance(e, Binary):
        side = e.right if e.op in ("/", "%", "<<", ">>") else e.left
    else:
        side = getattr(e, "operand", e)
    return const_interval(side) if isinstance(side, Const) else IntInterval.bottom()


def _peak_rss_mib() -> Optional[float]:
    """このプロセスの最大常駐メモリ（MiB）。resource モジュールがない環境では None。"""
    if resource is None:
        return None
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # Linux は KiB、macOS はバイト単位
    scale = 1 if sys.platform == "darwin" else 1024
    return round(peak * scale / 2**20, 3)


def build_layout(program: Program, config: AnalysisConfig = DEFAULT_CONFIG) -> Layout:
    return Layout.build(program, config.shrink_above, config.clocked, config.machine())


def _points(program: Program) -> Dict[int, ProgramPoint]:
    points: Dict[int, ProgramPoint] = {}
    for fn in program.functions:
        for s in iter_stmts(fn.body):
            points[s.point.uid] = s.point
    return points


@dataclass
class Analysis:
    """1 回の解析の中身（レポートのほか、テスト用に環境や不変条件も持つ）。"""

    program: Program
    layout: Layout
    packing: PackingResult
    ctx: AnalysisContext
    final: AbstractEnv
    invariants: Dict[PointKey, AbstractEnv]
    alarms: List[Alarm]
    elapsed: float
    config: AnalysisConfig
    file: str = "<input>"
    # プロセスの最大常駐メモリ（MiB）。測れない環境では None
    peak_memory_mib: Optional[float] = None

    # --- 問い合わせ ---

    def cell(self, name: str) -> CellId:
        """変数名（ローカルなら `関数.名前`）のスカラーセル。"""
        if self.layout.has_var(name):
            return self.layout.scalar_cell(name)
        for d in self.program.all_vars():
            if d.name == name and d.var is not None and self.layout.has_var(d.var):
                return self.layout.scalar_cell(d.var)
        raise KeyError(name)

    def interval(self, name: str, at: Optional[PointKey] = None) -> Interval:
        env = self.final if at is None else self.invariants.get(at, AbstractEnv.bottom())
        if env.is_bottom:
            raise KeyError(f"{name}: point not reached")
        return env.interval(self.cell(name))

    def loop_heads(self) -> List[PointKey]:
        return sorted(k for k in self.invariants if k[1] == "head")

    def point_of(self, uid: int) -> ProgramPoint:
        return _points(self.program)[uid]

    # --- レポート ---

    def useful_octagons(self) -> List[str]:
        ids = []
        for pid in self.ctx.useful:
            if self.ctx.binding(pid).pack.kind == OCTAGON:
                ids.append(pid)
        return sorted(ids)

    def stats(self) -> Dict[str, Any]:
        instantiated = Counter(b.pack.kind for b in self.ctx.bindings)
        return {
            "iterator": asdict(self.ctx.stats),
            "packing": asdict(self.packing.stats),
            "instantiated_packs": dict(sorted(instantiated.items())),
            "cells": len(self.layout),
        }

    def dump_invariants(self) -> Dict[str, Any]:
        points = _points(self.program)
        out: Dict[str, Any] = {}
        for (uid, where), env in sorted(self.invariants.items()):
            p = points.get(uid)
            label = f"{p} {where}" if p is not None else f"#{uid} {where}"
            out[label] = env.dump(self.ctx)
        return out

    def timing(self) -> Dict[str, float]:
        out = {"elapsed_seconds": round(self.elapsed, 6)}
        if self.peak_memory_mib is not None:
            out["peak_memory_mib"] = self.peak_memory_mib
        return out

    def report(self, include_invariants: bool = False) -> Report:
        return Report(
            file=self.file,
            alarms=list(self.alarms),
            stats=self.stats(),
            useful_packs=self.useful_octagons(),
            pruned_inputs=list(self.program.pruned_inputs),
            invariants=self.dump_invariants() if include_invariants else None,
            timing=self.timing(),
        )


def _bindings(config: AnalysisConfig, packing: PackingResult, available: Dict[str, DomainInfo]) -> Tuple[Binding, ...]:
    out = []
    for domain in enabled_domains(config.domains, available):
        for pack in domain.packs(packing):
            out.append(Binding(domain, pack))
    return tuple(out)


def analyze_program_text(text: str, config: AnalysisConfig = DEFAULT_CONFIG, file: str = "<input>") -> Analysis:
    """ソース文字列を解析する。"""
    available = discover_domains()
    config.validate(tuple(available))
    started = time.perf_counter()
    machine: Machine = config.machine()
    sink = AlarmSink()
    program = load_program(text, file, config, alarms=sink)
    layout = build_layout(program, config)
    packing = compute_packing(program, layout, config.tree_bool_cap)
    if config.packs_file:
        try:
            ids = read_pack_ids(Path(config.packs_file))
        except OSError as exc:
            raise ConfigError(f"cannot read packs file {config.packs_file}: {exc.strerror or exc}") from exc
        packing = filter_useful_packs(packing, ids)
    ctx = AnalysisContext(
        layout=layout,
        machine=machine,
        thresholds=config.thresholds(),
        clock=config.clock(),
        bindings=_bindings(config, packing, available),
        linearize=config.linearize,
        clocked=config.clocked,
        alarms=sink,
    )
    final, invariants = analyze_program(program, ctx, config.iterator())
    alarms = ctx.alarms.sorted() if ctx.alarms is not None else []
    elapsed = time.perf_counter() - started
    peak = _peak_rss_mib()
    logger.info("{}: {} alarms in {:.3f}s", file, len(alarms), elapsed)
    return Analysis(program, layout, packing, ctx, final, invariants, alarms, elapsed, config, file, peak)


def analyze(path: str, config: AnalysisConfig = DEFAULT_CONFIG) -> Report:
    """ファイルを解析してレポートを返す。設定に応じて不変条件と有用なパックも書き出す。"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FrontendError(f"cannot read {path}: {exc.strerror or exc}") from exc
    analysis = analyze_program_text(text, config, file=path)
    report = analysis.report(include_invariants=config.dump_invariants is not None)
    if config.dump_invariants:
        Path(config.dump_invariants).write_text(json.dumps(report.invariants, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("invariants written to {}", config.dump_invariants)
    if config.emit_useful_packs:
        write_pack_ids(Path(config.emit_useful_packs), report.useful_packs)
        logger.info("{} useful octagon packs written to {}", len(report.useful_packs), config.emit_useful_packs)
    return report
