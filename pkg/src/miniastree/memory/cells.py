"""
変数から抽象セルへの対応（メモリ配置）。

- スカラー変数・構造体のフィールドはそれぞれ 1 セル
- 短い配列は要素ごとに 1 セル（展開）
- `shrink_above` より長い配列は全要素をまとめた 1 セル（縮約）
- 時計（wait_tick の回数）は隠しセル `__clock__`
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union

from ..frontend.ast import BOOL, FLOAT, INT, ArrayType, Program, RecordType, ScalarType, VarDecl
from ..numeric.intervals import DEFAULT_MACHINE, FloatInterval, Interval, IntInterval, Machine

PathElem = Union[int, str]

ATOMIC = "atomic"
ELEMENT = "element"
SHRUNK = "shrunk"
FIELD = "field"


@dataclass(frozen=True, order=True)
class CellId:
    var: str
    path: Tuple[PathElem, ...] = ()
    kind: str = field(default=ATOMIC, compare=False)

    def __str__(self) -> str:
        s = self.var
        for p in self.path:
            if isinstance(p, int):
                s += f"[{p}]"
            elif p == "*":
                s += "[*]"
            else:
                s += f".{p}"
        return s


CLOCK = CellId("__clock__")


@dataclass(frozen=True)
class CellInfo:
    cell: CellId
    ty: str
    decl: Optional[VarDecl]
    volatile: Optional[Interval] = None
    clocked: bool = False

    @property
    def is_volatile(self) -> bool:
        return self.volatile is not None

    @property
    def is_atomic(self) -> bool:
        return self.cell.kind == ATOMIC

    @property
    def is_strong(self) -> bool:
        # 強い更新・ガードによる絞り込みができるセル
        return self.volatile is None and self.cell.kind != SHRUNK


@dataclass(frozen=True)
class VarLayout:
    decl: VarDecl
    cells: Tuple[CellId, ...]
    length: int = 0
    shrunk: bool = False


def range_interval(kind: str, lo, hi) -> Interval:
    if kind == FLOAT:
        return FloatInterval.of(float(lo), float(hi))
    return IntInterval(int(lo), int(hi))


def zero_interval(kind: str) -> Interval:
    if kind == FLOAT:
        return FloatInterval.const(0.0)
    return IntInterval.const(0)


class Layout:
    """型付きプログラムの全変数についてのセル配置。"""

    def __init__(self, shrink_above: int = 64, clocked: bool = True, machine: Machine = DEFAULT_MACHINE) -> None:
        self.shrink_above = shrink_above
        self.clocked = clocked
        self.machine = machine
        self._vars: Dict[str, VarLayout] = {}
        self._info: Dict[CellId, CellInfo] = {CLOCK: CellInfo(CLOCK, INT, None)}

    @classmethod
    def build(cls, program: Program, shrink_above: int = 64, clocked: bool = True, machine: Machine = DEFAULT_MACHINE) -> "Layout":
        layout = cls(shrink_above, clocked, machine)
        for d in program.all_vars():
            layout._add(d)
        return layout

    def _add(self, d: VarDecl) -> None:
        assert d.var is not None
        ty = d.ty
        if isinstance(ty, ScalarType):
            vol = range_interval(ty.kind, *d.volatile) if d.volatile is not None else None
            clocked = self.clocked and ty.kind == INT and d.is_persistent and vol is None
            cell = CellId(d.var)
            self._info[cell] = CellInfo(cell, ty.kind, d, vol, clocked)
            self._vars[d.var] = VarLayout(d, (cell,))
        elif isinstance(ty, ArrayType):
            kind = ty.elem.kind
            if ty.length > self.shrink_above:
                cell = CellId(d.var, ("*",), SHRUNK)
                self._info[cell] = CellInfo(cell, kind, d)
                self._vars[d.var] = VarLayout(d, (cell,), ty.length, shrunk=True)
            else:
                cells = tuple(CellId(d.var, (i,), ELEMENT) for i in range(ty.length))
                for c in cells:
                    self._info[c] = CellInfo(c, kind, d)
                self._vars[d.var] = VarLayout(d, cells, ty.length)
        elif isinstance(ty, RecordType):
            cells = []
            for fname, fty in ty.fields:
                c = CellId(d.var, (fname,), FIELD)
                self._info[c] = CellInfo(c, fty.kind, d)
                cells.append(c)
            self._vars[d.var] = VarLayout(d, tuple(cells))
        else:
            raise TypeError(f"unknown type {ty!r}")

    # --- 参照 ---

    def cells(self) -> Iterator[CellId]:
        return iter(self._info)

    def info(self, cell: CellId) -> CellInfo:
        return self._info[cell]

    def var(self, var: str) -> VarLayout:
        return self._vars[var]

    def has_var(self, var: str) -> bool:
        return var in self._vars

    def scalar_cell(self, var: str) -> CellId:
        return self._vars[var].cells[0]

    def field_cell(self, var: str, name: str) -> CellId:
        return CellId(var, (name,), FIELD)

    def element_cells(self, var: str, lo: int, hi: int) -> List[CellId]:
        """添字が [lo, hi]（配列の範囲内に切り詰め済み）のとき指しうるセル。"""
        vl = self._vars[var]
        if vl.shrunk:
            return [vl.cells[0]]
        return list(vl.cells[lo : hi + 1])

    def concrete_cell(self, var: str, path: PathElem = None) -> CellId:
        """具体的なメモリ位置に対応する抽象セル。"""
        vl = self._vars[var]
        if path is None:
            return vl.cells[0]
        if isinstance(path, int):
            return vl.cells[0] if vl.shrunk else vl.cells[path]
        return CellId(var, (path,), FIELD)

    def initial_interval(self, cell: CellId) -> Interval:
        info = self._info[cell]
        if info.volatile is not None:
            return info.volatile
        return zero_interval(info.ty)

    def is_bool(self, cell: CellId) -> bool:
        return self._info[cell].ty == BOOL

    def __len__(self) -> int:
        return len(self._info)
