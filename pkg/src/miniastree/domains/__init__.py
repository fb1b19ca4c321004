"""
関係ドメインのプラグイン。

各サブパッケージ `<name>/domain.py` が `DOMAIN_CLASS` を公開する（`registry` が探索する）。
ドメインはパック（少数のセルの組）ごとに値（ストア）を持ち、
区間との縮約は `refine` で行う。ストアは不変な値として扱う。
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Any, Dict, List, Mapping, Optional, Protocol, Sequence, Tuple

if TYPE_CHECKING:
    from ..context import AnalysisContext
    from ..frontend.ast import Expr
    from ..memory.cells import CellId
    from ..memory.env import AbstractEnv
    from ..numeric.intervals import Interval
    from ..numeric.linear import LinearForm
    from ..packing import Pack, PackingResult

Store = Any
Refined = Optional[Tuple[Store, Dict["CellId", "Interval"]]]


class RelationalDomain(Protocol):
    name: str
    # 受け持つパックの種類（"octagon" / "ellipsoid" / "tree"）
    kind: str

    def packs(self, packing: "PackingResult") -> List["Pack"]:
        ...

    def init_store(self, ctx: "AnalysisContext", pack: "Pack", env: "AbstractEnv") -> Store:
        ...

    def assign(
        self,
        ctx: "AnalysisContext",
        before: "AbstractEnv",
        after: "AbstractEnv",
        store: Store,
        pack: "Pack",
        cell: "CellId",
        rhs: "Expr",
        lf: Optional["LinearForm"],
    ) -> Store:
        """cell := rhs。before は代入前、after は区間を更新した後の環境。"""
        ...

    def guard(self, ctx: "AnalysisContext", env: "AbstractEnv", store: Store, pack: "Pack", atom: "Expr", polarity: bool) -> Optional[Store]:
        """atom が polarity になる状態に制限する。空なら None。"""
        ...

    def join(self, ctx: "AnalysisContext", s1: Store, e1: "AbstractEnv", s2: Store, e2: "AbstractEnv") -> Store:
        ...

    def widen(self, ctx: "AnalysisContext", s1: Store, e1: "AbstractEnv", s2: Store, e2: "AbstractEnv") -> Store:
        ...

    def narrow(self, ctx: "AnalysisContext", s1: Store, e1: "AbstractEnv", s2: Store, e2: "AbstractEnv") -> Store:
        ...

    def leq(self, s1: Store, s2: Store) -> bool:
        ...

    def refine(self, ctx: "AnalysisContext", env: "AbstractEnv", store: Store, pack: "Pack") -> Refined:
        """ストアと区間の相互縮約。(新しいストア, セル → 区間) か、空なら None。"""
        ...

    def contains(self, store: Store, pack: "Pack", values: Mapping["CellId", Sequence[Any]]) -> bool:
        ...

    def dump(self, store: Store, pack: "Pack") -> List[str]:
        ...


__all__ = ["RelationalDomain", "Store", "Refined"]
