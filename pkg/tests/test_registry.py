from __future__ import annotations

from types import SimpleNamespace

import pytest

from miniastree.errors import ConfigError
from miniastree.registry import DomainInfo, _maybe_get_domain_class, discover_local_domains, enabled_domains


class _Dummy:
    pass


class TestDiscovery:
    """パッケージ内のドメインの探索。"""

    def test_local_domains(self):
        found = discover_local_domains()
        assert set(found) == {"octagon", "ellipsoid", "decision_tree"}
        assert all(info.source == "local" for info in found.values())

    def test_class_forms(self):
        module = SimpleNamespace(DOMAIN_CLASS=_Dummy)

        assert _maybe_get_domain_class(_Dummy) is _Dummy
        assert _maybe_get_domain_class(module) is _Dummy
        assert _maybe_get_domain_class(lambda: _Dummy) is _Dummy
        assert _maybe_get_domain_class(42) is None


class TestEnabledDomains:
    def test_order_follows_names(self):
        available = {
            "a": DomainInfo("a", _Dummy, "local"),
            "b": DomainInfo("b", dict, "local"),
        }
        out = enabled_domains(["b", "a"], available)
        assert isinstance(out[0], dict)
        assert isinstance(out[1], _Dummy)

    def test_unknown_name(self):
        with pytest.raises(ConfigError, match="Domain 'zz' not found. Available: a"):
            enabled_domains(["zz"], {"a": DomainInfo("a", _Dummy, "local")})
