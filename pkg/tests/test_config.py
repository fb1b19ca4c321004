from __future__ import annotations

import pytest

from miniastree.config import DEFAULT_CONFIG, AnalysisConfig, load_config_file, parse_config
from miniastree.errors import ConfigError


class TestAnalysisConfig:
    """既定値・上書き・検証。"""

    def test_defaults(self):
        c = AnalysisConfig()
        assert c.domains == ("octagon", "ellipsoid", "decision_tree")
        assert c.max_ticks == 1_000_000
        assert c.validate() is c

    def test_replace_ignores_none(self):
        c = DEFAULT_CONFIG.replace(unroll=None, delay=5)
        assert c.unroll == DEFAULT_CONFIG.unroll
        assert c.delay == 5

    def test_replace_rejects_unknown_keys(self):
        with pytest.raises(ConfigError):
            DEFAULT_CONFIG.replace(widen_harder=True)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"unroll": -1},
            {"thresh_lambda": 1.0},
            {"epsilon": -0.1},
            {"format": "xml"},
            {"domains": ("polyhedra",)},
        ],
    )
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            DEFAULT_CONFIG.replace(**overrides).validate()

    def test_derived_objects(self):
        c = DEFAULT_CONFIG.replace(thresh_count=3, max_ticks=10, partition=("f",), int_bits=16)
        assert c.thresholds().above(5.0) == 8.0
        assert c.clock().max_ticks == 10
        assert c.machine().int_max == 32767
        assert c.iterator().partition == frozenset({"f"})


class TestConfigFile:
    def test_parse(self):
        values = parse_config(
            "# 解析の設定\n"
            "unroll = 3\n"
            "epsilon = 0.001\n"
            "clocked = false\n"
            "domains = octagon, decision_tree\n"
            "max-iterations = 50  # 予算\n"
        )
        assert values == {
            "unroll": 3,
            "epsilon": 0.001,
            "clocked": False,
            "domains": ("octagon", "decision_tree"),
            "max_iterations": 50,
        }

    def test_error_names_the_line(self):
        with pytest.raises(ConfigError, match=r"cfg:2: unknown key 'speed'"):
            parse_config("unroll = 1\nspeed = 9\n", "cfg")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="expects a int"):
            parse_config("delay = soon\n")

    def test_missing_separator(self):
        with pytest.raises(ConfigError, match="expected 'key = value'"):
            parse_config("delay\n")

    def test_load_file(self, tmp_path):
        path = tmp_path / "analysis.cfg"
        path.write_text("delay = 4\nformat = json\n", encoding="utf-8")
        c = load_config_file(str(path))
        assert c.delay == 4
        assert c.format == "json"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config_file(str(tmp_path / "none.cfg"))
