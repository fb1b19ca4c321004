from __future__ import annotations

import random
from pathlib import Path
from typing import Callable, Dict

import pytest

from miniastree.analyzer import Analysis, analyze_program_text
from miniastree.config import DEFAULT_CONFIG

CORPUS_DIR = Path(__file__).parent / "corpus"


@pytest.fixture
def analyze_source() -> Callable[..., Analysis]:
    """ソース文字列を既定設定（キーワードで上書き可）で解析する。"""

    def _analyze(text: str, **overrides) -> Analysis:
        return analyze_program_text(text, DEFAULT_CONFIG.replace(**overrides), file="<test>")

    return _analyze


@pytest.fixture(scope="session")
def corpus() -> Dict[str, str]:
    return {p.stem: p.read_text(encoding="utf-8") for p in sorted(CORPUS_DIR.glob("*.mc"))}


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS_DIR


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240601)
