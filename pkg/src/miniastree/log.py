from __future__ import annotations

import sys

from loguru import logger

_LEVELS = {0: "WARNING", 1: "INFO"}


def setup(verbosity: int = 0) -> None:
    # CLI からのみ呼ぶ。-v で INFO、-vv 以上で DEBUG
    level = _LEVELS.get(verbosity, "DEBUG")
    logger.remove()
    logger.add(sys.stderr, format="[{level}] {message}", level=level)
    logger.enable("miniastree")
