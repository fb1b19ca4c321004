from __future__ import annotations

import importlib
import pkgutil
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from loguru import logger

from .errors import ConfigError

ENTRY_POINT_GROUP = "miniastree.domains"


@dataclass
class DomainInfo:
    # ドメイン情報（名前 / クラス / 由来）
    name: str
    cls: type
    source: str  # "local" または パッケージ配布物の名前


def _maybe_get_domain_class(obj: Any) -> Optional[type]:
    # 受け入れる形式: クラス本体 / DOMAIN_CLASS 変数 / クラスを返すファクトリ
    if isinstance(obj, type):
        return obj
    if hasattr(obj, "DOMAIN_CLASS") and isinstance(obj.DOMAIN_CLASS, type):
        return obj.DOMAIN_CLASS
    if callable(obj):
        try:
            v = obj()
            if isinstance(v, type):
                return v
        except Exception:
            return None
    return None


def discover_local_domains(base_pkg: str = "miniastree.domains") -> Dict[str, DomainInfo]:
    # パッケージ内の関係ドメインを探索（サブパッケージの domain モジュール）
    found: Dict[str, DomainInfo] = {}
    try:
        pkg = importlib.import_module(base_pkg)
    except ImportError:
        return found

    for m in sorted(pkgutil.iter_modules(pkg.__path__), key=lambda m: m.name):
        if not m.ispkg:
            continue
        mod_name = f"{base_pkg}.{m.name}.domain"
        try:
            mod = importlib.import_module(mod_name)
        except Exception as exc:
            logger.warning("skipping domain package {}: {}", mod_name, exc)
            continue
        cls = _maybe_get_domain_class(mod)
        if cls:
            found[m.name] = DomainInfo(name=m.name, cls=cls, source="local")
    return found


def discover_entrypoint_domains(group: str = ENTRY_POINT_GROUP) -> Dict[str, DomainInfo]:
    # エントリポイント経由で登録された外部パッケージのドメインを探索
    from importlib import metadata

    found: Dict[str, DomainInfo] = {}
    try:
        entry_points = metadata.entry_points
        try:
            eps = entry_points(group=group)  # type: ignore[arg-type]
        except TypeError:
            eps = entry_points().get(group, [])  # type: ignore[index]
    except Exception:
        return found

    for ep in eps:
        try:
            obj = ep.load()
        except Exception as exc:
            logger.warning("skipping domain plugin {}: {}", ep.name, exc)
            continue
        cls = _maybe_get_domain_class(obj)
        if cls:
            dist = getattr(ep, "dist", None)
            source = getattr(dist, "name", None) or ep.value
            found[ep.name] = DomainInfo(name=ep.name, cls=cls, source=source)
    return found


def discover_domains() -> Dict[str, DomainInfo]:
    # ローカル + エントリポイントの両方から集約（同名はエントリポイントが優先）
    domains: Dict[str, DomainInfo] = {}
    domains.update(discover_local_domains())
    domains.update(discover_entrypoint_domains())
    return domains


def enabled_domains(names: Sequence[str], available: Optional[Dict[str, DomainInfo]] = None) -> List[Any]:
    """names に挙げたドメインを、その順にインスタンス化する。"""
    if available is None:
        available = discover_domains()
    out = []
    for name in names:
        info = available.get(name)
        if info is None:
            listed = ", ".join(sorted(available)) or "<none>"
            raise ConfigError(f"Domain '{name}' not found. Available: {listed}")
        out.append(info.cls())
    return out
