from __future__ import annotations

import json

import pytest
from loguru import logger

from miniastree import __version__
from miniastree.__main__ import _load_config, build_parser, main


@pytest.fixture(autouse=True)
def _quiet_logger():
    yield
    logger.remove()
    logger.disable("miniastree")


def _exit_code(argv):
    try:
        main(argv)
    except SystemExit as exc:
        return exc.code
    return 0


class TestExitCodes:
    """終了コード：0 警告なし、1 警告あり、2 入力エラー、3 設定エラー、4 発散。"""

    def test_clean_program(self, corpus_dir, capsys):
        assert _exit_code(["analyze", str(corpus_dir / "clean.mc")]) == 0
        assert capsys.readouterr().out.endswith("0 alarms\n")

    def test_alarm(self, corpus_dir, capsys):
        assert _exit_code(["analyze", str(corpus_dir / "div_zero.mc")]) == 1
        assert "DIV_ZERO" in capsys.readouterr().out

    def test_syntax_error(self, tmp_path):
        src = tmp_path / "bad.mc"
        src.write_text("int x\nvoid main() { }\n", encoding="utf-8")
        assert _exit_code(["analyze", str(src)]) == 2

    def test_missing_file(self, tmp_path):
        assert _exit_code(["analyze", str(tmp_path / "nothing.mc")]) == 2

    def test_unknown_domain(self, corpus_dir):
        assert _exit_code(["analyze", str(corpus_dir / "clean.mc"), "--domains", "polyhedra"]) == 3

    def test_bad_config_file(self, corpus_dir, tmp_path):
        cfg = tmp_path / "a.cfg"
        cfg.write_text("speed = 3\n", encoding="utf-8")
        assert _exit_code(["analyze", str(corpus_dir / "clean.mc"), "--config", str(cfg)]) == 3

    def test_divergence(self, corpus_dir):
        assert _exit_code(["analyze", str(corpus_dir / "narrowing.mc"), "--max-iterations", "1"]) == 4

    def test_no_command(self, capsys):
        assert _exit_code([]) == 2


class TestOutput:
    def test_version(self, capsys):
        assert _exit_code(["--version"]) == 0
        assert capsys.readouterr().out.strip() == __version__

    def test_list_domains(self, capsys):
        assert _exit_code(["--list-domains"]) == 0
        out = capsys.readouterr().out
        assert "- octagon (local)" in out

    def test_json_and_files(self, corpus_dir, tmp_path, capsys):
        inv = tmp_path / "inv.json"
        packs = tmp_path / "packs.txt"
        code = _exit_code(
            [
                "analyze",
                str(corpus_dir / "octagon.mc"),
                "--format",
                "json",
                "--dump-invariants",
                str(inv),
                "--emit-useful-packs",
                str(packs),
            ]
        )
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["alarms"] == []
        assert data["useful_packs"] == packs.read_text(encoding="utf-8").split()
        assert json.loads(inv.read_text(encoding="utf-8"))

    def test_flags_reach_the_analysis(self, corpus_dir, capsys):
        code = _exit_code(["analyze", str(corpus_dir / "counter.mc"), "--no-clocked"])
        assert code == 1
        assert "OVERFLOW" in capsys.readouterr().out


    def test_threshold_and_layout_flags(self, corpus_dir):
        args = build_parser().parse_args(
            [
                "analyze",
                str(corpus_dir / "clean.mc"),
                "--thresh-alpha",
                "0.5",
                "--thresh-lambda",
                "4",
                "--thresh-count",
                "10",
                "--shrink-above",
                "2",
                "--tree-bool-cap",
                "2",
            ]
        )
        config = _load_config(args)
        assert (config.thresh_alpha, config.thresh_lambda, config.thresh_count) == (0.5, 4.0, 10)
        assert config.shrink_above == 2
        assert config.tree_bool_cap == 2
        # ±0.5·4^k (k = 0..10) と ±inf
        assert len(config.thresholds()) == 24

    def test_flags_override_the_config_file(self, corpus_dir, tmp_path):
        cfg = tmp_path / "a.cfg"
        cfg.write_text("thresh_count = 5\nshrink_above = 16\n", encoding="utf-8")
        args = build_parser().parse_args(["analyze", str(corpus_dir / "clean.mc"), "--config", str(cfg), "--shrink-above", "4"])
        config = _load_config(args)
        assert config.thresh_count == 5
        assert config.shrink_above == 4

    def test_invalid_threshold_ratio(self, corpus_dir):
        assert _exit_code(["analyze", str(corpus_dir / "clean.mc"), "--thresh-lambda", "1.0"]) == 3

class TestRun:
    """乱数入力での具体実行。"""

    def test_run_clean(self, corpus_dir, capsys):
        assert _exit_code(["run", str(corpus_dir / "clean.mc"), "--seed", "3"]) == 0
        assert capsys.readouterr().out.startswith("ticks: 0, steps: ")

    def test_run_fault(self, tmp_path, capsys):
        src = tmp_path / "fault.mc"
        src.write_text("int x;\nint y;\nvoid main() {\n  x = 0;\n  y = 10 / x;\n}\n", encoding="utf-8")
        assert _exit_code(["run", str(src)]) == 1
        assert "DIV_ZERO" in capsys.readouterr().out
