from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from .errors import ConfigError
from .iterator import IteratorConfig
from .numeric.clocked import ClockConfig
from .numeric.floats import FloatModel
from .numeric.intervals import Machine, ThresholdSet

FORMATS = ("text", "json")
KNOWN_DOMAINS = ("octagon", "ellipsoid", "decision_tree")


@dataclass(frozen=True)
class AnalysisConfig:
    # しきい値集合 (±α·λ^k)_{0≤k≤N}
    thresh_alpha: float = 1.0
    thresh_lambda: float = 2.0
    thresh_count: int = 60
    # ループの反復
    unroll: int = 1                     # 先頭で展開する反復の数
    delay: int = 2                      # 拡大の前に結合だけで進む反復の数
    delay_on_stable: bool = True
    epsilon: float = 1e-10              # 安定判定の前に区間を広げる相対幅
    narrowing_steps: int = 2
    max_iterations: int = 200           # これを超えたら発散として打ち切る
    # メモリとパック
    max_ticks: int = 1_000_000
    shrink_above: int = 64              # これより長い配列は 1 セルにまとめる
    tree_bool_cap: int = 3
    # トレース分割
    partition: Tuple[str, ...] = ()
    partition_cap: int = 64
    # ドメインと機能の切り替え
    domains: Tuple[str, ...] = KNOWN_DOMAINS
    clocked: bool = True
    linearize: bool = True
    int_bits: int = 32
    entry: str = "main"
    # ファイルと出力
    packs_file: Optional[str] = None
    emit_useful_packs: Optional[str] = None
    dump_invariants: Optional[str] = None
    format: str = "text"

    def replace(self, **overrides: Any) -> "AnalysisConfig":
        """None でない値だけを上書きした設定（CLI の引数で使う）。"""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **changes)

    def validate(self, known_domains: Optional[Tuple[str, ...]] = None) -> "AnalysisConfig":
        counts = (
            "thresh_count",
            "unroll",
            "delay",
            "narrowing_steps",
            "max_iterations",
            "max_ticks",
            "shrink_above",
            "tree_bool_cap",
            "partition_cap",
        )
        for name in counts:
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.thresh_lambda <= 1:
            raise ConfigError(f"thresh_lambda must be > 1, got {self.thresh_lambda}")
        if self.thresh_alpha <= 0:
            raise ConfigError(f"thresh_alpha must be > 0, got {self.thresh_alpha}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.int_bits < 2:
            raise ConfigError(f"int_bits must be >= 2, got {self.int_bits}")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown output format '{self.format}' (expected one of {', '.join(FORMATS)})")
        available = known_domains if known_domains is not None else KNOWN_DOMAINS
        for name in self.domains:
            if name not in available:
                raise ConfigError(f"unknown domain '{name}'. Available: {', '.join(sorted(available))}")
        return self

    # --- 派生する設定 ---

    def thresholds(self) -> ThresholdSet:
        return ThresholdSet.geometric(self.thresh_alpha, self.thresh_lambda, self.thresh_count)

    def clock(self) -> ClockConfig:
        return ClockConfig(self.max_ticks)

    def machine(self) -> Machine:
        return Machine(int_bits=self.int_bits, float_model=FloatModel())

    def iterator(self) -> IteratorConfig:
        return IteratorConfig(
            unroll=self.unroll,
            delay=self.delay,
            delay_on_stable=self.delay_on_stable,
            epsilon=self.epsilon,
            narrowing_steps=self.narrowing_steps,
            max_iterations=self.max_iterations,
            partition=frozenset(self.partition),
            partition_cap=self.partition_cap,
        )


DEFAULT_CONFIG = AnalysisConfig()


def _convert(key: str, default: Any, text: str, where: str) -> Any:
    field_type = type(default)
    if isinstance(default, bool):
        low = text.lower()
        if low not in ("true", "false"):
            raise ConfigError(f"{where}: {key} expects true or false, got '{text}'")
        return low == "true"
    if isinstance(default, tuple):
        return tuple(part.strip() for part in text.split(",") if part.strip())
    if default is None:
        return text or None
    try:
        return field_type(text)
    except ValueError as exc:
        raise ConfigError(f"{where}: {key} expects a {field_type.__name__}, got '{text}'") from exc


def parse_config(text: str, source: str = "<config>") -> Dict[str, Any]:
    """`key = value` 形式の設定を、AnalysisConfig のフィールド名 → 値の辞書にする。"""
    defaults = {f.name: getattr(DEFAULT_CONFIG, f.name) for f in dataclasses.fields(AnalysisConfig)}
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise ConfigError(f"{where}: expected 'key = value', got '{raw.strip()}'")
        if key not in defaults:
            raise ConfigError(f"{where}: unknown key '{key}'")
        values[key] = _convert(key, defaults[key], value.strip(), where)
    return values


def load_config_file(path: str) -> AnalysisConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    return DEFAULT_CONFIG.replace(**parse_config(text, path))
