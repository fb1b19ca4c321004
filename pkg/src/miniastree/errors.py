from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from .alarms import AlarmKind
    from .frontend.ast import ProgramPoint


class MiniAstreeError(Exception):
    """パッケージ内で送出される例外の基底クラス。"""

    exit_code = 1


@dataclass(frozen=True)
class Location:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class FrontendError(MiniAstreeError):
    exit_code = 2

    def __init__(self, message: str, location: Optional[Location] = None) -> None:
        self.message = message
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class ParseError(FrontendError):
    pass


class TypeCheckError(FrontendError):
    pass


class UnsupportedConstructError(FrontendError):
    pass


class ConfigError(MiniAstreeError):
    exit_code = 3


class DivergenceError(MiniAstreeError):
    """反復回数の上限を超えた（不健全な結果は返さない）。"""

    exit_code = 4

    def __init__(self, message: str, point: Optional["ProgramPoint"] = None) -> None:
        self.point = point
        super().__init__(message)


class InvalidFilterParams(ValueError):
    pass


class ConcreteFault(Exception):
    """具体意味論での実行時エラー（ゼロ除算・オーバーフローなど）。"""

    def __init__(self, kind: "AlarmKind", point: Optional["ProgramPoint"] = None) -> None:
        self.kind = kind
        self.point = point
        super().__init__(f"{kind.name.lower()} at {point}" if point else kind.name.lower())
