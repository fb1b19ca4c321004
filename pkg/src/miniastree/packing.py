"""
解析の前に構文だけから決めるパック（関係ドメインが扱う変数の組）。

- オクタゴン：ブロックごとに、そのブロックの線形な代入・条件に現れる変数（入れ子のブロックは見ない）
- 決定木：真理値と数値の依存関係から作り、真理値での分岐の下で数値が使われたものだけ残す
- 楕円：再初期化とフィルタ更新を if/else で切り替える決まった形のコード
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from loguru import logger

from .domains.ellipsoid.filter import FilterParams, match_filter_rhs
from .errors import InvalidFilterParams
from .frontend.ast import (
    BOOL,
    CMP_OPS,
    FLOAT,
    Assign,
    Binary,
    Block,
    Cast,
    Const,
    Expr,
    Field,
    If,
    Program,
    ScalarType,
    Stmt,
    Unary,
    VarRef,
    While,
    stmt_exprs,
    walk_expr,
)
from .memory.cells import CellId, Layout

OCTAGON = "octagon"
TREE = "tree"
ELLIPSOID = "ellipsoid"


@dataclass(frozen=True)
class Pack:
    kind: str
    # 数値変数のセル
    cells: Tuple[CellId, ...]
    # 決定木の真理値変数のセル（順序つき）
    bools: Tuple[CellId, ...] = ()
    params: Any = None
    confirmed: bool = True

    @property
    def all_cells(self) -> Tuple[CellId, ...]:
        return self.bools + self.cells

    @cached_property
    def id(self) -> str:
        names = ",".join(sorted(str(c) for c in self.all_cells))
        return f"{self.kind}-{hashlib.sha1(names.encode()).hexdigest()[:12]}"

    def __str__(self) -> str:
        inner = ", ".join(str(c) for c in self.cells)
        if self.bools:
            inner = ", ".join(str(b) for b in self.bools) + "; " + inner
        return f"{self.kind}{{{inner}}}"


@dataclass
class PackStats:
    octagons: int = 0
    octagon_mean_size: float = 0.0
    trees: int = 0
    tree_mean_bools: float = 0.0
    filters: int = 0
    rejected_filters: int = 0


@dataclass
class PackingResult:
    octagon_packs: List[Pack] = field(default_factory=list)
    tree_packs: List[Pack] = field(default_factory=list)
    filter_packs: List[Pack] = field(default_factory=list)
    stats: PackStats = field(default_factory=PackStats)

    def all_packs(self) -> List[Pack]:
        return self.octagon_packs + self.tree_packs + self.filter_packs

    def update_stats(self) -> None:
        s = self.stats
        s.octagons = len(self.octagon_packs)
        s.octagon_mean_size = sum(len(p.cells) for p in self.octagon_packs) / s.octagons if s.octagons else 0.0
        s.trees = len(self.tree_packs)
        s.tree_mean_bools = sum(len(p.bools) for p in self.tree_packs) / s.trees if s.trees else 0.0
        s.filters = len(self.filter_packs)


# --- セルの取り出し ---


class _Cells:
    """式に現れる、パックに入れられる（不揮発の原子的な）スカラー変数のセル。"""

    def __init__(self, layout: Layout) -> None:
        self.layout = layout

    def of_ref(self, e: Expr) -> Optional[CellId]:
        if not isinstance(e, VarRef) or e.var is None or not self.layout.has_var(e.var):
            return None
        vl = self.layout.var(e.var)
        if not isinstance(vl.decl.ty, ScalarType) or vl.decl.is_volatile:
            return None
        return vl.cells[0]

    def in_expr(self, e: Expr) -> List[CellId]:
        out: List[CellId] = []
        for sub in walk_expr(e):
            c = self.of_ref(sub)
            if c is not None and c not in out:
                out.append(c)
        return out

    def is_bool(self, c: CellId) -> bool:
        return self.layout.is_bool(c)


def is_linear(e: Expr) -> bool:
    """定数・変数・和・差・符号反転・定数倍・定数による除算・float への変換だけでできた式。"""
    if isinstance(e, (Const, VarRef, Field)):
        return e.ty != BOOL
    if isinstance(e, Unary):
        return e.op == "-" and is_linear(e.operand)
    if isinstance(e, Cast):
        return e.to == FLOAT and is_linear(e.operand)
    if isinstance(e, Binary):
        if e.op in ("+", "-"):
            return is_linear(e.left) and is_linear(e.right)
        if e.op == "*":
            return (isinstance(e.left, Const) and is_linear(e.right)) or (isinstance(e.right, Const) and is_linear(e.left))
        if e.op == "/" and e.ty == FLOAT:
            return isinstance(e.right, Const) and is_linear(e.left)
    return False


def _linear_test(e: Expr) -> bool:
    return isinstance(e, Binary) and e.op in CMP_OPS and e.left.ty != BOOL and is_linear(e.left) and is_linear(e.right)


def _blocks(program: Program) -> Iterator[Block]:
    def visit(block: Block) -> Iterator[Block]:
        yield block
        for s in block.stmts:
            if isinstance(s, Block):
                yield from visit(s)
            elif isinstance(s, If):
                yield from visit(s.then)
                if s.orelse is not None:
                    yield from visit(s.orelse)
            elif isinstance(s, While):
                yield from visit(s.body)

    for fn in program.functions:
        yield from visit(fn.body)


def _dedupe(packs: Iterable[Pack]) -> List[Pack]:
    seen: Set[str] = set()
    out = []
    for p in packs:
        if p.id not in seen:
            seen.add(p.id)
            out.append(p)
    return out


# --- オクタゴン ---


def infer_octagon_packs(program: Program, layout: Layout) -> List[Pack]:
    cells = _Cells(layout)
    packs = []
    for block in _blocks(program):
        found: List[CellId] = []
        for s in block.stmts:
            exprs: List[Expr] = []
            if isinstance(s, Assign) and is_linear(s.value) and s.target.ty != BOOL:
                exprs = [s.target, s.value]
            elif isinstance(s, (If, While)):
                exprs = [a for a in _atoms(s.cond) if _linear_test(a)]
            for e in exprs:
                for c in cells.in_expr(e):
                    if not cells.is_bool(c) and c not in found:
                        found.append(c)
        if len(found) >= 2:
            packs.append(Pack(OCTAGON, tuple(sorted(found))))
    return _dedupe(packs)


def _atoms(cond: Expr) -> Iterator[Expr]:
    if isinstance(cond, Unary) and cond.op == "!":
        yield from _atoms(cond.operand)
    elif isinstance(cond, Binary) and cond.op in ("&&", "||"):
        yield from _atoms(cond.left)
        yield from _atoms(cond.right)
    else:
        yield cond


# --- 決定木 ---


@dataclass
class _Tentative:
    bools: List[CellId]
    nums: List[CellId]
    confirmed: bool = False


class _TreePacker:
    def __init__(self, layout: Layout, cap: int) -> None:
        self.cells = _Cells(layout)
        self.cap = cap
        self.packs: List[_Tentative] = []

    def _split(self, cells: Sequence[CellId]) -> Tuple[List[CellId], List[CellId]]:
        bools = [c for c in cells if self.cells.is_bool(c)]
        return bools, [c for c in cells if not self.cells.is_bool(c)]

    def _add(self, bools: Sequence[CellId], nums: Sequence[CellId]) -> None:
        bools = list(bools)[: self.cap]
        for p in self.packs:
            if set(p.bools) == set(bools):
                p.nums.extend(n for n in nums if n not in p.nums)
                return
        self.packs.append(_Tentative(bools, list(dict.fromkeys(nums))))

    def _extend(self, b: CellId, used: Sequence[CellId]) -> None:
        for p in self.packs:
            if b in p.bools or not (set(used) & set(p.bools + p.nums)):
                continue
            # 上限を超える真理値は後から来たものを捨てる
            if len(p.bools) < self.cap:
                p.bools.append(b)

    def _confirm(self, conds: Sequence[CellId], used: Sequence[CellId]) -> None:
        for p in self.packs:
            if set(conds) & set(p.bools) and set(used) & set(p.nums):
                p.confirmed = True

    def block(self, block: Block, conds: Tuple[CellId, ...]) -> None:
        for s in block.stmts:
            self.stmt(s, conds)

    def stmt(self, s: Stmt, conds: Tuple[CellId, ...]) -> None:
        if isinstance(s, Block):
            self.block(s, conds)
            return
        if isinstance(s, Assign):
            target = self.cells.of_ref(s.target)
            used = self.cells.in_expr(s.value)
            bools, nums = self._split(used)
            if target is not None and self.cells.is_bool(target):
                if nums:
                    self._add([target], nums)
                self._extend(target, used)
            elif target is not None:
                deps = list(dict.fromkeys(bools + list(conds)))
                if deps:
                    self._add(deps, [target])
            self._confirm(conds, nums + ([target] if target is not None else []))
            return
        if isinstance(s, (If, While)):
            bools, nums = self._split(self.cells.in_expr(s.cond))
            self._confirm(conds, nums)
            inner = conds + tuple(b for b in bools if b not in conds)
            if isinstance(s, If):
                self.block(s.then, inner)
                if s.orelse is not None:
                    self.block(s.orelse, inner)
            else:
                self.block(s.body, inner)
            return
        used: List[CellId] = []
        for e in stmt_exprs(s):
            used.extend(self.cells.in_expr(e))
        self._confirm(conds, self._split(used)[1])

    def result(self) -> List[Pack]:
        out = []
        for p in self.packs:
            if p.confirmed and p.bools and p.nums:
                out.append(Pack(TREE, tuple(p.nums), tuple(p.bools), confirmed=True))
        return _dedupe(out)


def infer_tree_packs(program: Program, layout: Layout, cap: int = 3) -> List[Pack]:
    packer = _TreePacker(layout, cap)
    for fn in program.functions:
        packer.block(fn.body, ())
    return packer.result()


# --- 楕円フィルタ ---


def _assigns(block: Block) -> List[Assign]:
    return [s for s in block.stmts if isinstance(s, Assign)]


def _match_update(stmts: Sequence[Stmt], cells: _Cells, rejected: List[str]) -> Optional[Tuple[Pack, str]]:
    """`P = a*X - b*Y + t; Y = X; X = P;` が連続して現れれば、そのパック。"""
    for i in range(len(stmts) - 2):
        s1, s2, s3 = stmts[i : i + 3]
        if not all(isinstance(s, Assign) for s in (s1, s2, s3)):
            continue
        m = match_filter_rhs(s1.value)
        if m is None:
            continue
        p, x, y = cells.of_ref(s1.target), cells.of_ref(m.x), cells.of_ref(m.y)
        if None in (p, x, y) or len({p, x, y}) != 3:
            continue
        if cells.of_ref(s2.target) != y or cells.of_ref(s2.value) != x:
            continue
        if cells.of_ref(s3.target) != x or cells.of_ref(s3.value) != p:
            continue
        try:
            params = FilterParams(m.a, m.b)
        except InvalidFilterParams as exc:
            logger.warning("{}: filter-like update not tracked: {}", s1.point, exc)
            rejected.append(str(exc))
            return None
        return Pack(ELLIPSOID, (x, y, p), params=params), m.convention
    return None


def detect_filter_patterns(program: Program, layout: Layout) -> Tuple[List[Pack], int]:
    """(フィルタのパック, 係数が条件を満たさず捨てた数)。"""
    cells = _Cells(layout)
    packs: List[Pack] = []
    rejected: List[str] = []
    for block in _blocks(program):
        for s in block.stmts:
            if not isinstance(s, If) or s.orelse is None:
                continue
            for update, reinit in ((s.then, s.orelse), (s.orelse, s.then)):
                if not any(match_filter_rhs(a.value) for a in _assigns(update)):
                    continue
                found = _match_update(update.stmts, cells, rejected)
                if found is None:
                    continue
                pack, convention = found
                x, y = pack.cells[0], pack.cells[1]
                reset = {cells.of_ref(a.target) for a in _assigns(reinit)}
                if {x, y} <= reset:
                    logger.debug("filter pack {} ({} form)", pack, convention)
                    packs.append(pack)
    return _dedupe(packs), len(rejected)


# --- まとめと有用なパックの再利用 ---


def compute_packing(program: Program, layout: Layout, tree_bool_cap: int = 3) -> PackingResult:
    filters, rejected = detect_filter_patterns(program, layout)
    result = PackingResult(
        octagon_packs=infer_octagon_packs(program, layout),
        tree_packs=infer_tree_packs(program, layout, tree_bool_cap),
        filter_packs=filters,
    )
    result.update_stats()
    result.stats.rejected_filters = rejected
    s = result.stats
    logger.info(
        "packing: {} octagons (mean size {:.2f}), {} decision trees, {} filters",
        s.octagons,
        s.octagon_mean_size,
        s.trees,
        s.filters,
    )
    return result


def read_pack_ids(path: Path) -> List[str]:
    return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]


def write_pack_ids(path: Path, ids: Iterable[str]) -> None:
    Path(path).write_text("".join(f"{i}\n" for i in sorted(ids)), encoding="utf-8")


def filter_useful_packs(result: PackingResult, useful: Iterable[str]) -> PackingResult:
    """前回の解析で有用だったオクタゴンだけを残す。知らない id は無視する。"""
    wanted = set(useful)
    known = {p.id for p in result.all_packs()}
    for stale in sorted(wanted - known):
        logger.info("useful pack {} does not exist in this program; ignored", stale)
    kept = PackingResult(
        octagon_packs=[p for p in result.octagon_packs if p.id in wanted],
        tree_packs=list(result.tree_packs),
        filter_packs=list(result.filter_packs),
    )
    kept.update_stats()
    kept.stats.rejected_filters = result.stats.rejected_filters
    return kept
